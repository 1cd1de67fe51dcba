"""Scalar (and mode-wise complex) linear delay ODEs.

Holds the delayed exponential, the variation-of-constants formula for
z' + k1 z = k2 z(t - r), an RK4 method-of-steps integrator used as an
independent oracle, and the far-field nonlinear equation at v_plus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericalError, PreconditionError, StabilityError
from .model import ModelParams, birth_increment, birth_prime, equilibria


@dataclass(frozen=True)
class DelayedExpParams:
    k_bar: complex
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise PreconditionError("delayed exponential needs r > 0")


@dataclass
class LinearDDE:
    """z' + k1 z = k2 z(t - r) with history z0 on [-r, 0].

    ``dhistory`` is the derivative of the history; central differences are
    used when it is omitted.
    """

    k1: complex
    k2: complex
    r: float
    history: Callable
    dhistory: Callable | None = None

    def __post_init__(self):
        if not self.r > 0:
            raise PreconditionError("LinearDDE needs r > 0")

    @property
    def k_bar(self):
        return self.k2 * np.exp(self.k1 * self.r)

    def z0_prime(self, s):
        if self.dhistory is not None:
            return self.dhistory(s)
        h = self.r * 1e-6
        # one-sided at the ends of [-r, 0]
        s = np.asarray(s, dtype=float)
        lo = np.maximum(s - h, -self.r)
        hi = np.minimum(s + h, 0.0)
        return (self.history(hi) - self.history(lo)) / (hi - lo)


def _segment_coefficients(k_bar, m_max):
    """Local polynomial coefficients of the delayed exponential on each segment.

    Segment j (j >= 0) covers [(j-1) r, j r); its polynomial is in the local
    variable s = t - (j-1) r and is returned scaled by r: coeffs are for
    powers of (s / r), so ``k`` must already include the factor r.
    """
    coeffs = [np.array([1.0 + 0j])]
    for _ in range(m_max):
        prev = coeffs[-1]
        end = prev.sum()  # value at s/r = 1
        integ = k_bar * prev / np.arange(1, len(prev) + 1)
        coeffs.append(np.concatenate([[end], integ]))
    return coeffs


def delayed_exp(pe: DelayedExpParams, t):
    """Delayed exponential e_r^{k t}: fundamental solution of z' = k z(t - r), z = 1 on [-r, 0].

    Evaluated segment by segment: on [(m-1) r, m r) the function is a degree-m
    polynomial whose coefficients follow from the previous segment by
    integration, evaluated by Horner's rule. Values that overflow saturate at
    the largest float and raise a RuntimeWarning.
    """
    t_arr = np.asarray(t, dtype=float)
    r = pe.r
    kr = pe.k_bar * r
    is_complex = np.iscomplexobj(pe.k_bar) and np.imag(pe.k_bar) != 0
    seg = np.floor(t_arr / r).astype(np.int64) + 1  # segment index for t >= -r
    out = np.zeros(t_arr.shape, dtype=complex)
    valid = t_arr >= -r
    if np.any(valid):
        m_max = int(seg[valid].max())
        with np.errstate(over="ignore", invalid="ignore"):
            coeffs = _segment_coefficients(kr, max(m_max, 0))
            for j in np.unique(seg[valid]):
                sel = valid & (seg == j)
                x = (t_arr[sel] - (j - 1) * r) / r
                c = coeffs[j]
                acc = np.full(x.shape, c[-1], dtype=complex)
                for a in c[-2::-1]:
                    acc = acc * x + a
                out[sel] = acc
    if not np.all(np.isfinite(out)):
        warnings.warn("delayed exponential overflowed; values saturated", RuntimeWarning)
        big = np.finfo(float).max
        re = np.nan_to_num(out.real, nan=big, posinf=big, neginf=-big)
        im = np.nan_to_num(out.imag, nan=0.0, posinf=big, neginf=-big)
        out = re + 1j * im
    res = out if is_complex else out.real
    return res if res.ndim else res[()]


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Adaptive Simpson quadrature; works for complex-valued integrands."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4 * fm + fb)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth >= max_depth:
            raise NumericalError("adaptive Simpson did not converge", residual=abs(delta))
        if abs(delta) <= 15 * eps:
            total = total + left + right + delta / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2, depth + 1))
    return total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL2_NODES, _GL2_WEIGHTS = np.polynomial.legendre.leggauss(48)


def adaptive_gauss(f, a, b, tol=1e-10, max_depth=30):
    """Integral of a smooth vectorized f over [a, b].

    Compares 24- and 48-point Gauss-Legendre rules and bisects until they
    agree to ``tol`` (or to rounding level); complex integrands are fine.
    """
    total = 0.0
    stack = [(a, b, tol, 0)]
    while stack:
        lo, hi, eps, depth = stack.pop()
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        coarse = half * np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES))
        terms = half * _GL2_WEIGHTS * f(mid + half * _GL2_NODES)
        fine = np.sum(terms)
        # nothing below the rounding level of the sum itself is attainable
        eps = max(eps, 64 * np.finfo(float).eps * float(np.sum(np.abs(terms))))
        if abs(fine - coarse) <= eps or depth >= max_depth:
            if depth >= max_depth and abs(fine - coarse) > eps:
                raise NumericalError("Gauss-Legendre bisection did not converge",
                                     residual=abs(fine - coarse))
            total = total + fine
        else:
            stack.append((lo, mid, eps / 2, depth + 1))
            stack.append((mid, hi, eps / 2, depth + 1))
    return total


def solve_linear_dde_formula(dde: LinearDDE, t, tol=1e-10):
    """Closed-form solution of z' + k1 z = k2 z(t - r) via the delayed exponential:

        z(t) = exp(-k1 (t + r)) E(t) z0(-r)
               + int_{-r}^{0} exp(-k1 (t - s)) E(t - r - s) [z0'(s) + k1 z0(s)] ds

    with E the delayed exponential of rate k2 exp(k1 r). The integral is
    split at the kinks of E and each smooth piece is done by adaptive
    Gauss-Legendre quadrature.
    """
    r, k1 = dde.r, dde.k1
    pe = DelayedExpParams(dde.k_bar, r)

    def forcing(s):
        return dde.z0_prime(s) + k1 * dde.history(s)

    def one(tt):
        if tt < 0:
            raise PreconditionError("formula is for t >= 0")
        head = np.exp(-k1 * (tt + r)) * delayed_exp(pe, tt) * dde.history(-r)

        def integrand(s):
            return np.exp(-k1 * (tt - s)) * delayed_exp(pe, tt - r - s) * forcing(s)

        # E has kinks where t - r - s is a multiple of r
        knots = [-r]
        j = math.floor(tt / r + 1e-12)
        while True:
            s = tt - (j + 1) * r
            if s <= -r + 1e-14:
                break
            if s < 0:
                knots.append(s)
            j += 1
        knots = sorted(set(knots)) + [0.0]
        tail = sum(
            adaptive_gauss(integrand, lo, hi, tol * (hi - lo) / r)
            for lo, hi in zip(knots[:-1], knots[1:])
            if hi > lo
        )
        return head + tail

    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.array([one(float(x)) for x in t_arr])
    if not (np.iscomplexobj(k1) or np.iscomplexobj(dde.k2)):
        vals = vals.real if np.iscomplexobj(vals) else vals
    return vals if np.ndim(t) else vals[0]


def steps_per_delay(r, dt):
    m = r / dt
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9 * max(1.0, m):
        raise ConfigError(f"dt = {dt!r} does not divide the delay r = {r!r}")
    return mi


class MethodOfSteps:
    """Classic RK4 for y' = f(t, y, y(t - r)) with constant delay.

    Delayed values at stage times come from the history callable while
    t - r <= 0 and otherwise from cubic Hermite interpolation of the stored
    steps (values and right derivatives), which keeps fourth order. Only the
    last r/dt steps are kept, so long runs stay memory-bounded.
    """

    def __init__(self, rhs, history, r, dt):
        self.rhs, self.history, self.r, self.dt = rhs, history, float(r), float(dt)
        self.m = steps_per_delay(r, dt) if r > 0 else 0
        self.t = 0.0
        self.n = 0
        self.y = np.asarray(history(0.0))
        self.f = np.asarray(rhs(0.0, self.y, np.asarray(history(-self.r)) if r > 0 else self.y))
        m = max(self.m, 1)
        dtype = np.result_type(self.y, self.f)
        self._ys = np.zeros((m,) + self.y.shape, dtype=dtype)
        self._fs = np.zeros_like(self._ys)

    def _node(self, k):
        if k == self.n:
            return self.y, self.f
        return self._ys[k % self.m], self._fs[k % self.m]

    def step(self):
        dt, t, y, n, m = self.dt, self.t, self.y, self.n, self.m
        k1 = self.f
        if m == 0:
            k2 = self.rhs(t + dt / 2, y + dt / 2 * k1, y + dt / 2 * k1)
            k3 = self.rhs(t + dt / 2, y + dt / 2 * k2, y + dt / 2 * k2)
            y4 = y + dt * k3
            k4 = self.rhs(t + dt, y4, y4)
        else:
            j = n - m
            if j < 0:
                dmid = np.asarray(self.history((j + 0.5) * dt))
                dright = np.asarray(self.history((j + 1) * dt))
            else:
                ya, fa = self._node(j)
                yb, fb = self._node(j + 1)
                dmid = 0.5 * (ya + yb) + dt * (fa - fb) / 8.0
                dright = yb
            k2 = self.rhs(t + dt / 2, y + dt / 2 * k1, dmid)
            k3 = self.rhs(t + dt / 2, y + dt / 2 * k2, dmid)
            k4 = self.rhs(t + dt, y + dt * k3, dright)
        y_new = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if m:
            self._ys[n % m] = y
            self._fs[n % m] = self.f
        self.y = y_new
        self.n = n + 1
        self.t = self.n * dt
        if m == 0:
            yd = self.y
        elif self.n - m < 0:
            yd = np.asarray(self.history((self.n - m) * dt))
        else:
            yd = self._node(self.n - m)[0]
        self.f = np.asarray(self.rhs(self.t, self.y, yd))
        return self.y

    def run(self, t_end, record_every=1, callback=None):
        """Advance to t_end; returns (times, states) recorded every ``record_every`` steps."""
        n_steps = int(round(t_end / self.dt))
        if abs(n_steps * self.dt - t_end) > 1e-9 * max(1.0, t_end):
            raise ConfigError("t_end must be a multiple of dt")
        ts, ys = [self.t], [np.copy(self.y)]
        for i in range(1, n_steps + 1):
            self.step()
            if callback is not None:
                callback(self.t, self.y)
            if i % record_every == 0:
                ts.append(self.t)
                ys.append(np.copy(self.y))
        return np.array(ts), np.array(ys)


def integrate_dde_steps(rhs, history, r, t_end, dt, record_every=1):
    """RK4 method of steps for y' = rhs(t, y, y(t - r)); dt must divide r.

    Returns (t, y) at every ``record_every``-th step including t = 0.
    """
    if not t_end > 0:
        raise ConfigError("t_end must be positive")
    return MethodOfSteps(rhs, history, r, dt).run(t_end, record_every)


def farfield_ode(mp: ModelParams, z0, t_end, dt=None, blowup_factor=10.0):
    """Far-field limit of the perturbation: z' + delta z = b(v_plus + z(t-r)) - b(v_plus).

    ``z0`` is a constant or a callable history on [-r, 0]. Raises
    StabilityError once |z| exceeds ``blowup_factor * v_plus``.
    """
    vp = equilibria(mp).v_plus
    hist = z0 if callable(z0) else (lambda s, c=float(z0): c)
    if dt is None:
        dt = mp.r / 100 if mp.r > 0 else 1e-2

    def rhs(t, z, zd):
        return -mp.delta * z + birth_increment(vp, zd, mp)

    limit = blowup_factor * vp

    def guard(t, y):
        if not abs(y) <= limit:
            raise StabilityError(f"far-field solution left |z| <= {limit:g} at t = {t:g}")

    stepper = MethodOfSteps(rhs, lambda s: np.float64(hist(s)), mp.r, dt)
    return stepper.run(t_end, 1, guard)


def farfield_linear_rate(mp: ModelParams) -> float:
    """Decay rate of the undelayed linearisation, delta - b'(v_plus) (valid for r = 0)."""
    return mp.delta - float(birth_prime(equilibria(mp).v_plus, mp))


@dataclass(frozen=True)
class DecayBoundReport:
    eps1: float
    C: float
    C0: float
    max_violation: float
    fundamental_violation: float

    @property
    def passed(self):
        return self.max_violation <= 1e-8 and self.fundamental_violation <= 1e-8


def decay_bound_c0(dde: LinearDDE, tol=1e-10):
    """C0 = exp(-k1 r)|z0(-r)| + int_{-r}^0 exp(k1 s)|z0'(s) + k1 z0(s)| ds."""
    k1, r = dde.k1, dde.r
    integ = adaptive_simpson(
        lambda s: np.exp(k1 * s) * abs(dde.z0_prime(s) + k1 * dde.history(s)), -r, 0.0, tol
    )
    return float(np.real(np.exp(-k1 * r) * abs(dde.history(-r)) + integ))


def decay_bound_check(dde: LinearDDE, t_grid, z=None) -> DecayBoundReport:
    """Checks |z(t)| <= C exp(-eps1 (k1 - k2) t) for k1 >= k2 >= 0.

    eps1 is the largest of 0.01, ..., 0.99 for which exp(-k1 t) E(t)
    exp(eps1 (k1 - k2) t) does not grow on [5 r, t_end]; C is then C0 times
    the supremum of that product over the grid.
    """
    k1, k2, r = float(np.real(dde.k1)), float(np.real(dde.k2)), dde.r
    if not k1 >= k2 >= 0:
        raise PreconditionError("decay bound needs k1 >= k2 >= 0")
    t = np.asarray(t_grid, dtype=float)
    if z is None:
        z = solve_linear_dde_formula(dde, t)
    E = delayed_exp(DelayedExpParams(k2 * math.exp(k1 * r), r), t)
    fund = np.exp(-k1 * t) * E
    C0 = decay_bound_c0(dde)
    kappa = k1 - k2
    late = t >= 5 * r
    eps1 = 0.0
    for eps in np.arange(99, 0, -1) / 100.0:
        prod = fund * np.exp(eps * kappa * t)
        seg = prod[late]
        if len(seg) == 0 or seg.max() <= seg[0] * (1 + 1e-9):
            eps1 = float(eps)
            break
    C = C0 * float(np.max(fund * np.exp(eps1 * kappa * t)))
    bound = C * np.exp(-eps1 * kappa * t)
    viol = float(np.max(np.abs(z) - bound, initial=0.0))
    fviol = float(np.max(np.abs(z) - C0 * fund, initial=0.0))
    return DecayBoundReport(eps1, C, C0, max(viol, 0.0), max(fviol, 0.0))
