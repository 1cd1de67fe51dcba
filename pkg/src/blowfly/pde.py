"""Explicit method-of-steps finite differences for the delayed parabolic equations.

All solvers share one stepping core: second-order central differences for
diffusion, central (default) or second-order upwind differences for
advection, forward Euler in time with dt = r/m, and a ring buffer holding the
last m spatial snapshots so the delayed read u(t - r, xi - c r) is an exact
index lookup in time. The spatial shift c r is an integer number of cells
plus a fractional remainder handled by cubic Lagrange interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .charspec import EXP_CLAMP, WaveSpec
from .errors import ConfigError, NumericalError
from .model import ModelParams, birth_increment, birth_secant, equilibria

NEG_TOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """n equally spaced points on [-L, L], endpoints included."""

    L: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError("grid needs at least 3 points")
        if not self.L > 0:
            raise ConfigError("grid half-width must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.L / (self.n - 1)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @classmethod
    def snapped(cls, L, n, shift):
        """Grid with L adjusted so that ``shift`` is a whole number of cells."""
        if shift <= 0:
            return cls(L, n)
        dx0 = 2 * L / (n - 1)
        k = max(1, round(shift / dx0))
        return cls(shift / k * (n - 1) / 2, n)

    def index_of(self, x) -> int:
        return int(np.clip(round((x + self.L) / self.dx), 0, self.n - 1))


def cubic_weights(theta):
    """Lagrange weights at nodes -1, 0, 1, 2 for a point theta in [0, 1]."""
    t = theta
    return np.array(
        [
            -t * (t - 1) * (t - 2) / 6.0,
            (t + 1) * (t - 1) * (t - 2) / 2.0,
            -(t + 1) * t * (t - 2) / 2.0,
            (t + 1) * t * (t - 1) / 6.0,
        ]
    )


class DelayedShift:
    """Reads f(xi - s) on the grid from nodal values of f.

    Values left of -L come from ghost nodes supplied by the caller (the
    far-field value of the field, or an exponential tail for profiles).
    """

    def __init__(self, grid: Grid1D, shift: float):
        if shift < 0:
            raise ConfigError("shift must be non-negative")
        self.grid, self.shift = grid, float(shift)
        q = self.shift / grid.dx
        k = math.floor(q + 1e-9)
        frac = q - k
        if frac < 1e-9:
            frac = 0.0
        self.k, self.frac = k, frac
        self.exact = frac == 0.0
        # point xi_i - s sits at index i - k - frac = (i - k - 1) + theta
        self.theta = 1.0 - frac
        self.w = cubic_weights(self.theta) if not self.exact else None
        self.n_ghost = k + 3

    def ghost_positions(self):
        g = self.grid
        return -g.L - g.dx * np.arange(self.n_ghost, 0, -1)

    def apply(self, f, ghost=0.0):
        """f evaluated at xi - s. ``ghost`` is a scalar or an array over ghost_positions()."""
        n, k, ng = self.grid.n, self.k, self.n_ghost
        if k == 0 and self.exact:
            return f
        pad = np.empty(ng + n + 1, dtype=np.result_type(f, ghost))
        pad[:ng] = ghost
        pad[ng : ng + n] = f
        pad[-1] = f[-1]
        if self.exact:
            return pad[ng - k : ng - k + n]
        base = ng - k - 1  # pad index of node (i - k - 1) for i = 0
        w = self.w
        return (
            w[0] * pad[base - 1 : base - 1 + n]
            + w[1] * pad[base : base + n]
            + w[2] * pad[base + 1 : base + 1 + n]
            + w[3] * pad[base + 2 : base + 2 + n]
        )

    def matrix(self, ghost_coeff=None):
        """Sparse operator S with S @ f == apply(f, ghost) when the ghost values
        are ``ghost_coeff * f[0]`` (ghost_coeff an array over ghost positions) or
        zero when ghost_coeff is None."""
        from scipy.sparse import coo_matrix

        n, k, ng = self.grid.n, self.k, self.n_ghost
        gc = np.zeros(ng) if ghost_coeff is None else np.asarray(ghost_coeff, dtype=float)
        rows, cols, vals = [], [], []
        if self.exact:
            offs, ws = [0], [1.0]
            base = ng - k
        else:
            offs, ws = [-1, 0, 1, 2], list(self.w)
            base = ng - k - 1
        for off, wv in zip(offs, ws):
            p = base + off + np.arange(n)  # pad positions
            inside = (p >= ng) & (p < ng + n)
            rows.append(np.nonzero(inside)[0])
            cols.append(p[inside] - ng)
            vals.append(np.full(inside.sum(), wv))
            right = p >= ng + n
            rows.append(np.nonzero(right)[0])
            cols.append(np.full(right.sum(), n - 1))
            vals.append(np.full(right.sum(), wv))
            left = p < ng
            if np.any(left) and np.any(gc != 0):
                rows.append(np.nonzero(left)[0])
                cols.append(np.zeros(left.sum(), dtype=int))
                vals.append(wv * gc[p[left]])
        return coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()


def stable_dt(grid: Grid1D, D: float, speed: float, r: float, safety: float = 0.4):
    """Largest dt = r/m satisfying dt <= safety dx^2/(2D) and dt <= safety dx/|speed|."""
    dt_max = safety * grid.dx**2 / (2 * D)
    if speed:
        dt_max = min(dt_max, safety * grid.dx / abs(speed))
    if r == 0:
        return dt_max
    return r / math.ceil(r / dt_max - 1e-12)


def check_dt(grid: Grid1D, D: float, speed: float, r: float, dt: float, safety: float = 0.4):
    if dt > safety * grid.dx**2 / (2 * D) * (1 + 1e-12):
        raise ConfigError(f"dt = {dt:g} violates the diffusive bound {safety} dx^2/(2D)")
    if speed and dt > safety * grid.dx / abs(speed) * (1 + 1e-12):
        raise ConfigError(f"dt = {dt:g} violates the advective bound {safety} dx/|c|")
    if r > 0:
        m = r / dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ConfigError(f"dt = {dt!r} does not divide r = {r!r}")


def _history_fn(history, grid):
    """Normalise a history spec to a callable s -> array over the grid."""
    if callable(history):
        xi = grid.xi

        def h(s):
            return np.asarray(history(s, xi), dtype=float)

        return h
    arr = np.asarray(history, dtype=float)
    if arr.shape != (grid.n,):
        raise ConfigError("history array must match the grid")
    return lambda s: arr


class DelayField:
    """State of one delayed parabolic evolution: current field plus ring of past snapshots.

    Solves u_t = D u_xx - a u_x + F(xi, u, u_delayed_shifted) with Dirichlet
    values at both ends.
    """

    def __init__(
        self,
        grid: Grid1D,
        dt: float,
        r: float,
        history,
        *,
        D: float,
        advection: float = 0.0,
        source: Callable | None = None,
        kernel: tuple | None = None,
        shift: float = 0.0,
        left: float = 0.0,
        right: float = 0.0,
        ghost=None,
        scheme: str = "central",
        name: str = "u",
        backend: str = "numba",
    ):
        self.grid, self.dt, self.r, self.name = grid, float(dt), float(r), name
        self.D, self.adv, self.source = float(D), float(advection), source
        if backend not in ("numba", "numpy"):
            raise ConfigError(f"unknown backend {backend!r}")
        if backend == "numba" and kernel is None:
            backend = "numpy"
        if backend == "numpy" and source is None:
            raise ConfigError("numpy backend needs a source callable")
        self.backend, self.kernel = backend, kernel
        self.left, self.right = float(left), float(right)
        if scheme not in ("central", "upwind2"):
            raise ConfigError(f"unknown advection scheme {scheme!r}")
        self.scheme = scheme
        self.shifter = DelayedShift(grid, shift)
        self.ghost = left if ghost is None else ghost
        self.m = int(round(r / dt)) if r > 0 else 0
        h = _history_fn(history, grid)
        self.u = np.array(h(0.0), dtype=float)
        self.u[0], self.u[-1] = self.left, self.right
        sh = self.shifter
        ng, n = sh.n_ghost, grid.n
        self._mid = slice(ng, ng + n)
        g = np.broadcast_to(np.asarray(self.ghost, dtype=float), (ng,))
        # ring rows are padded: ghosts on the left, the right end value on the right
        self.ring = np.empty((max(self.m, 1), ng + n + 1))
        self.ring[:, :ng] = g
        self.ring[:, -1] = self.right
        for i in range(self.m):
            self.ring[i, self._mid] = h((i - self.m) * self.dt)
        self._base = ng - sh.k if sh.exact else ng - sh.k - 1
        self.step_index = 0
        self.t_now = 0.0
        dx = grid.dx
        self._cd = self.D * self.dt / dx**2
        self._ca = self.adv * self.dt / (2 * dx)
        if scheme == "central" and abs(self.adv) * dx / self.D > 2:
            raise ConfigError("cell Peclet number above 2: use scheme='upwind2'")
        self._new = np.empty(grid.n)
        self.last_delayed = None
        self.last_excess = -np.inf
        self._pe = None
        self._w = np.zeros(4) if sh.exact else np.ascontiguousarray(sh.w)

    def delayed(self):
        """u(t - r, xi - shift) on the grid for the current step."""
        past = self.ring[self.step_index % self.m, self._mid] if self.m else self.u
        return self.shifter.apply(past, self.ghost)

    def advance(self):
        if self.backend == "numba":
            return self._advance_kernel()
        u, new = self.u, self._new
        ud = self.delayed()
        self.last_delayed = ud
        src = self.source(u, ud)
        inner = slice(1, -1)
        new[inner] = u[inner] + self._cd * (u[2:] - 2 * u[1:-1] + u[:-2]) + self.dt * src[inner]
        if self.adv:
            if self.scheme == "central":
                new[inner] -= self._ca * (u[2:] - u[:-2])
            else:
                a = self._ca
                if self.adv > 0:
                    new[2:-1] -= a * (3 * u[2:-1] - 4 * u[1:-2] + u[:-3])
                    new[1] -= 2 * a * (u[1] - u[0])
                else:
                    new[1:-2] -= a * (-3 * u[1:-2] + 4 * u[2:-1] - u[3:])
                    new[-2] -= 2 * a * (u[-1] - u[-2])
        new[0], new[-1] = self.left, self.right
        if self.m:
            self.ring[self.step_index % self.m, self._mid] = u
        self.u, self._new = new, u
        self.step_index += 1
        self.t_now = self.step_index * self.dt
        return self.u

    def _advance_kernel(self):
        u, new = self.u, self._new
        slot = self.step_index % self.m if self.m else 0
        past = self.ring[slot]
        if not self.m:
            past[self._mid] = u
        kind, prm, phi_s, e_up = self.kernel
        if self._pe is None:
            self._pe = np.ascontiguousarray(prm[1] * np.exp(-prm[2] * phi_s))
        sh = self.shifter
        excess, finite = _kernels.step(
            u, new, past, self._base, self._w, sh.exact, kind, prm, phi_s, self._pe, e_up,
            self._cd, self._ca, self.dt, _kernels.UPWIND2 if self.scheme == "upwind2" else 0,
            self.adv, self.left, self.right,
        )
        self.last_excess = excess
        if not finite:
            raise NumericalError(
                f"{self.name}: non-finite value at step {self.step_index + 1}",
                step=self.step_index + 1,
            )
        if self.m:
            past[self._mid] = u
        self.u, self._new = new, u
        self.step_index += 1
        self.t_now = self.step_index * self.dt
        return self.u

    def check_finite(self):
        if not np.all(np.isfinite(self.u)):
            raise NumericalError(
                f"{self.name}: non-finite value at step {self.step_index}", step=self.step_index
            )


@dataclass
class Series:
    """Snapshots and per-record scalar diagnostics of one or more evolutions."""

    t: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)

    def arrays(self):
        out = {"t": np.asarray(self.t)}
        for k, v in self.scalars.items():
            out[k] = np.asarray(v)
        return out


def march(fields, t_end, *, record_every=None, snapshot_every=None, diagnostics=None,
          monitors=(), finite_check_every=200):
    """Advance evolutions in lockstep to t_end.

    ``diagnostics`` maps names to callables of the fields dict, recorded every
    ``record_every`` steps; ``monitors`` are called every step; snapshots of
    every field are kept every ``snapshot_every`` steps.
    """
    fields = fields if isinstance(fields, dict) else {f.name: f for f in fields}
    first = next(iter(fields.values()))
    dt = first.dt
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-8 * max(1.0, t_end):
        n_steps = int(math.ceil(t_end / dt - 1e-9))
    series = Series()
    diagnostics = diagnostics or {}

    def record(snap):
        series.t.append(first.t_now)
        for k, fn in diagnostics.items():
            series.scalars.setdefault(k, []).append(fn(fields))
        if snap:
            for k, f in fields.items():
                series.snapshots.setdefault(k, []).append(f.u.copy())

    record(snapshot_every is not None)
    for mon in monitors:
        mon(fields)
    for i in range(1, n_steps + 1):
        for f in fields.values():
            f.advance()
        for mon in monitors:
            mon(fields)
        if i % finite_check_every == 0 or i == n_steps:
            for f in fields.values():
                f.check_finite()
        rec = record_every is not None and (i % record_every == 0 or i == n_steps)
        snap = snapshot_every is not None and i % snapshot_every == 0
        if rec or snap:
            record(snap)
    if series.snapshots:
        series.snapshots = {k: np.array(v) for k, v in series.snapshots.items()}
    return series


# ---------------------------------------------------------------- equations


_EMPTY = np.zeros(1)


def _prm(mp, a1=0.0, k2=0.0, damp=0.0):
    return np.array([mp.delta, mp.p, mp.a, a1, k2, damp])


def frame_speed(ws: WaveSpec, mp: ModelParams) -> float:
    """Largest advection speed among the moving-frame equations (sets the CFL bound)."""
    return max(ws.c, abs(ws.c - 2 * mp.D * ws.lam))


def _resolve_dt(grid, D, speed, r, dt):
    if dt is None:
        return stable_dt(grid, D, speed, r)
    check_dt(grid, D, speed, r, dt)
    return dt


def lab_field(mp: ModelParams, v0, grid: Grid1D, dt=None, left=None, right=None,
              backend="numba"):
    """v_t = D v_xx - delta v + b(v(t - r, x)).

    Dirichlet values default to the end values of the initial data, which
    are its far-field limits (v_- and v_+ for a front).
    """
    dt = _resolve_dt(grid, mp.D, 0.0, mp.r, dt)
    first = _history_fn(v0, grid)(0.0)
    left = float(first[0]) if left is None else left
    right = float(first[-1]) if right is None else right

    def source(v, vd):
        return -mp.delta * v + mp.p * vd * np.exp(-mp.a * vd)

    f = DelayField(grid, dt, mp.r, v0, D=mp.D, source=source, left=left, right=right, name="v",
                   kernel=(_kernels.LAB, _prm(mp), _EMPTY, _EMPTY), backend=backend)
    if np.any(f.u < 0):
        raise ConfigError("lab-frame initial data must be non-negative")
    return f


def evolve_lab(mp, v0, grid, dt=None, t_end=10.0, record_every=None, snapshot_every=None,
               backend="numba"):
    f = lab_field(mp, v0, grid, dt, backend=backend)
    neg = NegativityMonitor("v")
    series = march([f], t_end, record_every=record_every, snapshot_every=snapshot_every,
                   monitors=[neg])
    series.scalars["min_v"] = [neg.minimum]
    return f, series


def profile_ghost(shifter: DelayedShift, phi, tail_rate):
    """Ghost values of a profile left of -L: phi(-L) exp(tail_rate (x + L))."""
    x = shifter.ghost_positions()
    return phi[0] * np.exp(tail_rate * (x + shifter.grid.L))


def _profile_tail_rate(ws: WaveSpec, mp: ModelParams):
    from .charspec import lambda_pair

    if ws.critical:
        return ws.lam
    return lambda_pair(mp, ws.c)[0]


def perturbation_field(ws: WaveSpec, mp: ModelParams, phi, u0, grid, dt=None, scheme="central",
                       tail_rate=None, backend="numba"):
    """u_t + c u_xi - D u_xixi + delta u = b(phi_s + u_s) - b(phi_s), s = (t - r, xi - c r)."""
    dt = _resolve_dt(grid, mp.D, frame_speed(ws, mp), mp.r, dt)
    shift = ws.c * mp.r
    sh = DelayedShift(grid, shift)
    rate = _profile_tail_rate(ws, mp) if tail_rate is None else tail_rate
    phi_s = sh.apply(phi, profile_ghost(sh, phi, rate))

    def source(u, ud):
        return -mp.delta * u + birth_increment(phi_s, ud, mp)

    f = DelayField(grid, dt, mp.r, u0, D=mp.D, advection=ws.c, source=source, shift=shift,
                   scheme=scheme, name="u", backend=backend,
                   kernel=(_kernels.PERTURBATION, _prm(mp), np.ascontiguousarray(phi_s), _EMPTY))
    f.phi_shifted = phi_s
    return f


def evolve_perturbation(ws, mp, phi, u0, grid, dt=None, t_end=10.0, record_every=None,
                        snapshot_every=None, scheme="central", backend="numba"):
    f = perturbation_field(ws, mp, phi, u0, grid, dt, scheme, backend=backend)
    series = march([f], t_end, record_every=record_every, snapshot_every=snapshot_every)
    return f, series


def antiweight(ws: WaveSpec, grid: Grid1D, u):
    """u -> exp(-lam xi) u, with zero wherever u is exactly zero (no inf * 0)."""
    u = np.asarray(u, dtype=float)
    e = np.exp(np.clip(-ws.lam * grid.xi, -EXP_CLAMP, EXP_CLAMP))
    return np.where(u == 0, 0.0, u * e)


def unweight(ws: WaveSpec, grid: Grid1D, ut, clamp=EXP_CLAMP):
    ut = np.asarray(ut, dtype=float)
    e = np.exp(np.clip(ws.lam * grid.xi, -clamp, clamp))
    return np.where(ut == 0, 0.0, ut * e)


def coefficients(ws: WaveSpec, mp: ModelParams):
    """a0 = c - 2 D lam, a1 = c lam + delta - D lam^2, k2 = p exp(-lam c r)."""
    a0 = ws.c - 2 * mp.D * ws.lam
    a1 = ws.c * ws.lam + mp.delta - mp.D * ws.lam**2
    k2 = mp.p * math.exp(-ws.lam * ws.c * mp.r)
    return a0, a1, k2


class DelayBoundMonitor:
    """Tracks max over steps of |delayed source| - k2 |ut_delayed| for the anti-weighted field."""

    def __init__(self, name, k2):
        self.name, self.k2 = name, k2
        self.max_excess = -np.inf

    def __call__(self, fields):
        f = fields[self.name]
        if f.backend == "numba":
            if f.step_index:
                self.max_excess = max(self.max_excess, float(f.last_excess))
            return
        if f.last_delayed is None or f.last_source is None:
            return
        ex = np.max(np.abs(f.last_source) - self.k2 * np.abs(f.last_delayed) * (1 + 1e-12))
        self.max_excess = max(self.max_excess, float(ex))


def antiweighted_field(ws, mp, phi, ut0, grid, dt=None, scheme="central", tail_rate=None,
                       backend="numba"):
    """ut_t - D ut_xixi + a0 ut_xi + a1 ut = exp(-lam c r) q ut(t - r, xi - c r).

    q is the secant slope (b(phi_s + u_s) - b(phi_s)) / u_s with
    u_s = exp(lam (xi - c r)) ut_s, so |q| <= p whenever phi_s + u_s >= 0.
    """
    a0, a1, k2 = coefficients(ws, mp)
    dt = _resolve_dt(grid, mp.D, frame_speed(ws, mp), mp.r, dt)
    shift = ws.c * mp.r
    sh = DelayedShift(grid, shift)
    rate = _profile_tail_rate(ws, mp) if tail_rate is None else tail_rate
    phi_s = sh.apply(phi, profile_ghost(sh, phi, rate))
    expo = ws.lam * (grid.xi - shift)
    e_up = np.exp(np.minimum(expo, EXP_CLAMP))
    damp = math.exp(-ws.lam * ws.c * mp.r)
    field_ = None

    def source(ut, utd):
        us = np.where(utd == 0, 0.0, utd * e_up)
        q = birth_secant(phi_s, us, mp)
        delayed_src = damp * q * utd
        field_.last_source = delayed_src
        return -a1 * ut + delayed_src

    kern = (_kernels.ANTIWEIGHTED, _prm(mp, a1, k2, damp), np.ascontiguousarray(phi_s), e_up)
    field_ = DelayField(grid, dt, mp.r, ut0, D=mp.D, advection=a0, source=source, shift=shift,
                        scheme=scheme, name="utilde", kernel=kern, backend=backend)
    field_.last_source = None
    field_.phi_shifted = phi_s
    field_.overflow = bool(np.any(expo > EXP_CLAMP))
    return field_


def evolve_antiweighted(ws, mp, phi, ut0, grid, dt=None, t_end=10.0, record_every=None,
                        snapshot_every=None, scheme="central", backend="numba"):
    f = antiweighted_field(ws, mp, phi, ut0, grid, dt, scheme, backend=backend)
    _, _, k2 = coefficients(ws, mp)
    mon = DelayBoundMonitor("utilde", k2)
    series = march([f], t_end, record_every=record_every, snapshot_every=snapshot_every,
                   monitors=[mon])
    series.scalars["delay_bound_excess"] = [mon.max_excess]
    return f, series


def comparison_field(ws, mp, up0, grid, dt=None, scheme="central", backend="numba"):
    """u+_t - D u+_xixi + a0 u+_xi + a1 u+ = p exp(-lam c r) u+(t - r, xi - c r)."""
    a0, a1, k2 = coefficients(ws, mp)
    dt = _resolve_dt(grid, mp.D, frame_speed(ws, mp), mp.r, dt)

    def source(up, upd):
        return -a1 * up + k2 * upd

    f = DelayField(grid, dt, mp.r, up0, D=mp.D, advection=a0, source=source, shift=ws.c * mp.r,
                   scheme=scheme, name="uplus", backend=backend,
                   kernel=(_kernels.COMPARISON, _prm(mp, a1, k2), _EMPTY, _EMPTY))
    if np.any(f.u < 0):
        raise ConfigError("comparison equation needs non-negative initial history")
    return f


class NegativityMonitor:
    def __init__(self, name):
        self.name = name
        self.minimum = np.inf

    def __call__(self, fields):
        self.minimum = min(self.minimum, float(fields[self.name].u.min()))


def evolve_comparison(ws, mp, up0, grid, dt=None, t_end=10.0, record_every=None,
                      snapshot_every=None, scheme="central", backend="numba"):
    f = comparison_field(ws, mp, up0, grid, dt, scheme, backend=backend)
    neg = NegativityMonitor("uplus")
    series = march([f], t_end, record_every=record_every, snapshot_every=snapshot_every,
                   monitors=[neg])
    series.scalars["min_uplus"] = [neg.minimum]
    return f, series


# ---------------------------------------------------------------- oracles and checks


def heat_kernel_step(u_hist, mp: ModelParams, c: float, t: float, grid: Grid1D, phi=None,
                     n_quad: int = 40, tail_rate=None):
    """Duhamel representation on the first delay window, evaluated spectrally.

    u(t) = exp(-delta t) G(t) * u(0) + int_0^t exp(-delta (t - s)) G(t - s) * P(u(s - r, . - c r)) ds

    where G(t) is the heat kernel drifted by c t (the kernel of
    u_t + c u_xi = D u_xixi) and P(u) = b(phi + u) - b(phi) with phi taken
    at xi - c r. Convolutions are Fourier multipliers on the periodic box
    of the grid; the time integral uses Gauss-Legendre nodes. P = 0 when
    ``phi`` is None.
    """
    if not 0 <= t <= mp.r + 1e-12:
        raise ConfigError("heat_kernel_step is only valid for 0 <= t <= r")
    h = _history_fn(u_hist, grid)
    n, dx = grid.n, grid.dx
    eta = 2 * np.pi * np.fft.rfftfreq(n, d=dx)
    xi0 = grid.xi[0]

    def propagate(f, tau):
        fh = np.fft.rfft(f)
        mult = np.exp(-(mp.D * eta**2 + mp.delta) * tau - 1j * eta * c * tau)
        return np.fft.irfft(fh * mult, n)

    mass = np.abs(h(0.0))
    if mass.max() > 0 and max(mass[:5].max(), mass[-5:].max()) > 1e-10 * mass.max():
        import warnings

        warnings.warn("heat_kernel_step: data not negligible near the box edges", RuntimeWarning)
    out = propagate(h(0.0), t)
    if phi is not None and t > 0:
        sh = DelayedShift(grid, c * mp.r)
        rate = tail_rate if tail_rate is not None else 0.0
        phi_s = sh.apply(phi, profile_ghost(sh, phi, rate) if rate else phi[0])
        nodes, weights = np.polynomial.legendre.leggauss(n_quad)
        s_nodes = 0.5 * t * (nodes + 1)
        for s, w in zip(s_nodes, weights):
            us = sh.apply(h(s - mp.r), 0.0)
            out = out + 0.5 * t * w * propagate(birth_increment(phi_s, us, mp), t - s)
    del xi0
    return out


@dataclass(frozen=True)
class BoundednessReport:
    min_gap: float
    t: float
    xi: float
    passed: bool


def check_boundedness(ut_series, up_series, t=None, xi=None, tol=1e-8) -> BoundednessReport:
    """min over (t, xi) of u+ - |ut|; PASS iff >= -tol."""
    ut = np.asarray(ut_series, dtype=float)
    up = np.asarray(up_series, dtype=float)
    g = up - np.abs(ut)
    idx = np.unravel_index(int(np.argmin(g)), g.shape)
    mg = float(g[idx])
    tt = float(t[idx[0]]) if t is not None and g.ndim == 2 else float("nan")
    xx = float(xi[idx[-1]]) if xi is not None else float("nan")
    return BoundednessReport(mg, tt, xx, mg >= -tol)


class BoundednessMonitor:
    """Online version of check_boundedness, evaluated every step."""

    def __init__(self, ut_name="utilde", up_name="uplus", tol=1e-8):
        self.ut_name, self.up_name, self.tol = ut_name, up_name, tol
        self.min_gap = np.inf
        self.where = (float("nan"), -1)

    def __call__(self, fields):
        ut, up = fields[self.ut_name], fields[self.up_name]
        g, i = _kernels.min_gap(up.u, ut.u)
        if g < self.min_gap:
            self.min_gap = float(g)
            self.where = (up.t_now, int(i))

    def report(self, grid: Grid1D) -> BoundednessReport:
        t, i = self.where
        return BoundednessReport(self.min_gap, t, float(grid.xi[i]) if i >= 0 else float("nan"),
                                 self.min_gap >= -self.tol)


def lab_front_position(grid: Grid1D, v, level):
    """Leftmost crossing of ``level`` (linear interpolation)."""
    above = v >= level
    i = int(np.argmax(above))
    if i == 0:
        return grid.xi[0]
    x0, x1 = grid.xi[i - 1], grid.xi[i]
    v0, v1 = v[i - 1], v[i]
    return x0 + (level - v0) * (x1 - x0) / (v1 - v0)


def front_speed(mp: ModelParams, grid: Grid1D, t_end: float, start: float | None = None,
                dt=None, record_dt: float = 0.5, fit_from: float = 0.5):
    """Lab-frame invasion from a step (0 left, v_plus right) and its measured speed.

    Returns (speed, times, positions); speed is the least-squares slope of the
    leftward front position over t in [fit_from * t_end, t_end].
    """
    vp = equilibria(mp).v_plus
    x0 = 0.75 * grid.L if start is None else start
    v0 = np.where(grid.xi >= x0, vp, 0.0)
    f = lab_field(mp, v0, grid, dt)
    every = max(1, int(round(record_dt / f.dt)))
    series = march([f], t_end, record_every=every,
                   diagnostics={"pos": lambda fs: lab_front_position(grid, fs["v"].u, vp / 2)})
    t = np.asarray(series.t)
    pos = np.asarray(series.scalars["pos"])
    sel = t >= fit_from * t_end
    slope = np.polyfit(t[sel], pos[sel], 1)[0]
    return -slope, t, pos


__all__ = [
    "Grid1D",
    "DelayedShift",
    "DelayField",
    "march",
    "evolve_lab",
    "evolve_perturbation",
    "evolve_antiweighted",
    "evolve_comparison",
    "heat_kernel_step",
    "check_boundedness",
    "front_speed",
]
