"""Fourier-mode solution of the linear delayed comparison equation.

    u_t - D u_xixi + a0 u_xi + a1 u = k2 u(t - r, xi - c r),   k2 = p exp(-lam c r)

With u_hat(eta) = sum_j u_j exp(-i eta xi_j), each mode obeys the scalar
delay ODE u_hat' + A(eta) u_hat = B(eta) u_hat(t - r) where

    A(eta) = D eta^2 + a1 + i a0 eta,   B(eta) = k2 exp(-i eta c r).

The whole line is approximated by the periodic box through the nodes of
the finite-difference grid, so both solvers sample the same points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .charspec import WaveSpec, mu0
from .delayode import LinearDDE, MethodOfSteps, solve_linear_dde_formula
from .errors import ConfigError, PreconditionError
from .fitting import RateFit, fit_decay
from .model import ModelParams
from .pde import Grid1D, coefficients, frame_speed, stable_dt

BALANCE_RTOL = 1e-8
ALIAS_FRACTION = 0.1
ALIAS_ENERGY = 1e-6
EDGE_TOL = 1e-8


@dataclass(frozen=True)
class ModeSymbols:
    eta: np.ndarray
    A: np.ndarray
    B: np.ndarray
    B_bar: np.ndarray
    a0: float
    a1: float
    k2: float


def wavenumbers(grid: Grid1D) -> np.ndarray:
    """Angular frequencies of the real FFT on the n-node periodic box of spacing dx."""
    return 2 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)


def mode_coefficients(ws: WaveSpec, mp: ModelParams, eta) -> ModeSymbols:
    """Symbols A, B and B_bar = B exp(A r) of every mode.

    Checks the balance a1 >= k2 that makes the zero mode neutral (c = c*)
    or strictly damped (c > c*).
    """
    a0, a1, k2 = coefficients(ws, mp)
    if ws.critical:
        if abs(a1 - k2) > BALANCE_RTOL * max(1.0, abs(a1)):
            raise PreconditionError(f"critical pair unbalanced: a1 - k2 = {a1 - k2:.3e}")
    elif not a1 > k2:
        raise PreconditionError(f"a1 = {a1!r} does not exceed p exp(-lam c r) = {k2!r}")
    eta = np.asarray(eta, dtype=float)
    A = mp.D * eta**2 + a1 + 1j * a0 * eta
    B = k2 * np.exp(-1j * eta * ws.c * mp.r)
    with np.errstate(over="ignore", invalid="ignore"):
        B_bar = B * np.exp(A * mp.r)
    return ModeSymbols(eta, A, B, B_bar, a0, a1, k2)


@dataclass
class SpectralField:
    """Mode amplitudes of a real field on the grid nodes; n must be a power of two."""

    grid: Grid1D
    modes: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = self.grid.n
        if n & (n - 1):
            raise ConfigError("spectral grid size must be a power of two")

    @classmethod
    def from_values(cls, grid: Grid1D, u, t: float = 0.0):
        return cls(grid, np.fft.rfft(np.asarray(u, dtype=float)), t)

    def values(self) -> np.ndarray:
        return np.fft.irfft(self.modes, self.grid.n)


@dataclass
class SpectralSeries:
    t: np.ndarray
    sup: np.ndarray
    snapshots: np.ndarray | None
    final: SpectralField
    warnings: list = field(default_factory=list)


def _alias_fraction(modes):
    e = np.abs(modes) ** 2
    tot = e.sum()
    if tot == 0:
        return 0.0
    top = max(1, int(math.ceil(ALIAS_FRACTION * e.size)))
    return float(e[-top:].sum() / tot)


def _check(values, modes, issues):
    frac = _alias_fraction(modes)
    if frac > ALIAS_ENERGY and "alias" not in issues:
        issues.append("alias")
        warnings.warn(f"top modes carry {frac:.2e} of the energy: grid under-resolved",
                      RuntimeWarning, stacklevel=3)
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > EDGE_TOL and "edge" not in issues:
        issues.append("edge")
        warnings.warn(f"field reaches {edge:.2e} at the box edge: enlarge L", RuntimeWarning,
                      stacklevel=3)


def evolve_spectral(grid: Grid1D, history, ws: WaveSpec, mp: ModelParams, t_end: float,
                    dt: float | None = None, record_every: int | None = None,
                    snapshot_every: int | None = None) -> SpectralSeries:
    """Evolve every mode by the RK4 method of steps with complex state.

    ``history`` is an array (constant history) or a callable (s, xi) -> values
    for s in [-r, 0]. The default dt equals the finite-difference solver's,
    so both solvers are compared at identical times.
    """
    if mp.r <= 0:
        raise ConfigError("spectral solver expects r > 0")
    if dt is None:
        dt = stable_dt(grid, mp.D, frame_speed(ws, mp), mp.r)
    sym = mode_coefficients(ws, mp, wavenumbers(grid))
    A, B = sym.A, sym.B
    xi = grid.xi
    if callable(history):
        def hist(s):
            return np.fft.rfft(np.asarray(history(s, xi), dtype=float))
    else:
        h0 = np.fft.rfft(np.asarray(history, dtype=float))

        def hist(s):
            return h0

    def rhs(t, y, yd):
        return -A * y + B * yd

    mos = MethodOfSteps(rhs, hist, mp.r, dt)
    n_steps = int(round(t_end / dt))
    ts, sups, snaps = [0.0], [], []
    issues: list = []
    vals = np.fft.irfft(mos.y, grid.n)
    sups.append(float(np.abs(vals).max()))
    if snapshot_every:
        snaps.append(vals)
    for i in range(1, n_steps + 1):
        mos.step()
        rec = record_every and i % record_every == 0
        snap = snapshot_every and i % snapshot_every == 0
        if rec or snap or i == n_steps:
            vals = np.fft.irfft(mos.y, grid.n)
            if rec or i == n_steps:
                ts.append(mos.t)
                sups.append(float(np.abs(vals).max()))
            if snap:
                snaps.append(vals)
    _check(vals, mos.y, issues)
    final = SpectralField(grid, mos.y.copy(), mos.t)
    return SpectralSeries(np.array(ts), np.array(sups), np.array(snaps) if snaps else None,
                          final, issues)


def closed_form_spot_check(ws: WaveSpec, mp: ModelParams, etas, times, dt: float = 1e-3):
    """Largest relative gap between the delayed-exponential formula and RK4 per mode.

    Uses the unit constant history; each (eta, t) pair is one check.
    """
    sym = mode_coefficients(ws, mp, np.asarray(etas, dtype=float))
    worst = 0.0
    t_max = max(times)
    for A, B in zip(sym.A, sym.B):
        dde = LinearDDE(complex(A), complex(B), mp.r, lambda s: 1.0 + 0 * np.asarray(s),
                        dhistory=lambda s: 0.0 * np.asarray(s))
        formula = np.atleast_1d(solve_linear_dde_formula(dde, list(times)))
        mos = MethodOfSteps(lambda t, y, yd: -A * y + B * yd, lambda s: np.array(1.0 + 0j),
                            mp.r, dt)
        t_grid, ys = mos.run(math.ceil(t_max / dt - 1e-9) * dt)
        for tt, fv in zip(times, formula):
            k = int(round(tt / dt))
            ref = ys[k]
            worst = max(worst, abs(fv - ref) / max(1.0, abs(ref)))
    return worst


@dataclass(frozen=True)
class LinearDecayReport:
    fit: RateFit
    mu0: float
    ratio: float
    decaying: bool
    passed: bool


def measure_linear_decay(t, sup, ws: WaveSpec, mp: ModelParams, window=None) -> LinearDecayReport:
    """Fit C (1 + t)^(-1/2) exp(-mu1 t) (c > c*) or C (1 + t)^alpha (c = c*).

    The fit is done in the shifted time 1 + t. A series that does not
    decay is reported as such rather than raised.
    """
    t = np.asarray(t, dtype=float)
    sup = np.asarray(sup, dtype=float)
    if window is None:
        window = (5 * mp.r, float(t.max()))
    tt = 1.0 + t
    win = (1.0 + window[0], 1.0 + window[1])
    m0 = mu0(ws, mp)
    if ws.critical:
        fit = fit_decay(tt, sup, "algebraic", win)
        decaying = fit.alg_exponent < 0
        passed = -0.65 <= fit.alg_exponent <= -0.35
        return LinearDecayReport(fit, m0, float("nan"), decaying, passed)
    fit = fit_decay(tt, sup, "mixed", win)
    decaying = fit.exp_rate > 0
    passed = decaying and fit.r_squared >= 0.99
    return LinearDecayReport(fit, m0, fit.exp_rate / m0 if m0 > 0 else float("nan"), decaying,
                             passed)
