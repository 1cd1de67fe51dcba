"""Characteristic equations: minimal speed, exponent pairs, delay thresholds.

Everything here is real-root analysis of

    c*lam - D*lam**2 + delta = p*exp(-lam*c*r)              (linearisation at 0)
    -c*lam - D*lam**2 + delta = b'(v_plus)*exp(lam*c*r)       (linearisation at v_plus)

plus the regime classification that follows from them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError, PreconditionError, RegimeError
from .model import ModelParams, Regime, birth_prime, equilibria

ROOT_RTOL = 1e-10
BOUNDARY_TOL = 1e-9
EXP_CLAMP = 700.0


class Shape(str, enum.Enum):
    MONOTONE = "Monotone"
    OSCILLATORY = "Oscillatory"
    NOWAVE = "NoWave"
    AMBIGUOUS = "Ambiguous"


@dataclass(frozen=True)
class WaveSpec:
    c: float
    lam: float
    critical: bool


@dataclass(frozen=True)
class SpectralProfile:
    c_star: float
    lambda_star: float
    r_under: float | None
    r_bar: float
    c_upper: float
    lambda_upper: float
    r0: float | None
    regime: Regime

    def as_row(self) -> dict:
        return {
            "c_star": self.c_star,
            "lambda_star": self.lambda_star,
            "r_under": self.r_under if self.r_under is not None else float("nan"),
            "r_bar": self.r_bar,
            "c_upper": self.c_upper,
            "lambda_upper": self.lambda_upper,
            "r0": self.r0 if self.r0 is not None else float("nan"),
            "regime": self.regime.value,
        }


def gap(lam, c, mp: ModelParams):
    """g(lam) = c lam - D lam^2 + delta - p exp(-lam c r); positive between the roots."""
    return c * lam - mp.D * lam**2 + mp.delta - mp.p * np.exp(-lam * c * mp.r)


def gap_prime(lam, c, mp: ModelParams):
    return c - 2 * mp.D * lam + c * mp.r * mp.p * np.exp(-lam * c * mp.r)


def _tangency_residual(c, lam, mp):
    e = math.exp(-lam * c * mp.r)
    f1 = c * lam - mp.D * lam**2 + mp.delta - mp.p * e
    f2 = c - 2 * mp.D * lam + c * mp.r * mp.p * e
    return f1, f2


def _newton_tangency(mp, c, lam, maxit=100):
    """Damped Newton on the tangency system; returns (c, lam, scaled residual)."""
    D, p, r = mp.D, mp.p, mp.r
    scale1 = mp.delta + p

    def resid(c, lam):
        f1, f2 = _tangency_residual(c, lam, mp)
        return np.array([f1 / scale1, f2 / max(abs(c), 1e-300)])

    res = resid(c, lam)
    for _ in range(maxit):
        if np.max(np.abs(res)) <= ROOT_RTOL * 1e-2:
            break
        e = math.exp(-lam * c * r)
        J = np.array(
            [
                [lam + p * lam * r * e, c - 2 * D * lam + p * c * r * e],
                [1 + r * p * e * (1 - lam * c * r), -2 * D - c * c * r * r * p * e],
            ]
        )
        f = np.array(_tangency_residual(c, lam, mp))
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular tangency Jacobian", residual=res) from exc
        t = 1.0
        while True:
            cn, ln = c + t * step[0], lam + t * step[1]
            if cn > 0 and ln > 0:
                rn = resid(cn, ln)
                if np.max(np.abs(rn)) < np.max(np.abs(res)) or t < 1e-8:
                    break
            t *= 0.5
            if t < 1e-12:
                break
        c, lam, res = cn, ln, rn
    return c, lam, float(np.max(np.abs(res)))


def min_speed(mp: ModelParams, maxit: int = 100):
    """Critical speed and exponent (c_star, lambda_star) from the tangency of the
    characteristic curves at v = 0."""
    if mp.ratio() <= 1:
        raise RegimeError("min_speed needs p/delta > 1")
    c0 = 2 * math.sqrt(mp.D * (mp.p - mp.delta))
    l0 = math.sqrt((mp.p - mp.delta) / mp.D)
    if mp.r == 0:
        return c0, l0
    c, lam, res = _newton_tangency(mp, c0, l0, maxit)
    if not res <= ROOT_RTOL:
        # continuation in the delay from the undelayed closed form
        c, lam = c0, l0
        for rr in np.linspace(0, mp.r, 41)[1:]:
            c, lam, res = _newton_tangency(mp.replace(r=float(rr)), c, lam, maxit)
    if not res <= ROOT_RTOL:
        raise NumericalError("min_speed: Newton did not converge", residual=res)
    return c, lam


def _expand_right(f, lo, step):
    hi = lo + step
    for _ in range(200):
        if f(hi) < 0:
            return hi
        hi = lo + 2 * (hi - lo)
    raise NumericalError("bracket expansion failed")


def lambda_pair(mp: ModelParams, c: float, star=None):
    """The two positive roots lambda1 < lambda_star < lambda2 of g for c > c_star."""
    c_star, l_star = star if star is not None else min_speed(mp)
    if c <= c_star * (1 + 1e-12):
        raise PreconditionError(f"c = {c!r} must exceed c_star = {c_star!r}")
    f = lambda x: gap(x, c, mp)  # noqa: E731
    if not f(l_star) > 0:
        raise NumericalError("gap not positive at lambda_star", residual=f(l_star))
    l1 = brentq(f, 0.0, l_star, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    hi = _expand_right(f, l_star, max(l_star, 1.0))
    l2 = brentq(f, l_star, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return l1, l2


def r_under(mp: ModelParams):
    """Delay beyond which the linearisation at v_plus admits oscillations.

    Root of delta (ln(p/delta) - 1) r exp(delta r + 1) = 1; None if p/delta <= e.
    """
    beta = mp.delta * (math.log(mp.ratio()) - 1)
    if beta <= 0:
        return None
    f = lambda r: beta * r * math.exp(mp.delta * r + 1) - 1  # noqa: E731
    hi = 1.0 / mp.delta
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)


def r_bar(mp: ModelParams) -> float:
    """Hopf point of z' + delta z = b'(v_plus) z(t-r); +inf unless p/delta > e^2."""
    L = math.log(mp.ratio())
    w = (L - 2) * L
    if w <= 0 or mp.regime is not Regime.STRONG:
        return math.inf
    s = math.sqrt(w)
    return (math.pi - math.atan(s)) / (mp.delta * s)


def delay_thresholds(mp: ModelParams):
    return r_under(mp), r_bar(mp)


def _upper_h(lam, c, mp, bprime):
    x = np.minimum(lam * c * mp.r, EXP_CLAMP)
    return -c * lam - mp.D * lam**2 + mp.delta - bprime * np.exp(x)


def upper_root(mp: ModelParams, c: float):
    """Smallest positive real root of -c lam - D lam^2 + delta = b'(v_plus) exp(lam c r).

    Returns None when no positive real root exists (oscillatory approach to
    v_plus). For r = 0 this is the positive root of a quadratic.
    """
    bp = float(birth_prime(equilibria(mp).v_plus, mp))
    D, dl = mp.D, mp.delta
    if mp.r == 0 or bp == 0:
        disc = c * c + 4 * D * (dl - bp)
        if disc < 0:
            return None
        lam = (-c + math.sqrt(disc)) / (2 * D)
        return lam if lam > 0 else None
    h = lambda x: float(_upper_h(x, c, mp, bp))  # noqa: E731
    smax = min(EXP_CLAMP, max(50.0, 4 * math.log(1 + 1 / (abs(bp) * mp.r))))
    grid = np.concatenate([[0.0], np.geomspace(1e-8, smax, 4000)]) / (c * mp.r)
    vals = _upper_h(grid, c, mp, bp)
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx):
        i = idx[0]
        return brentq(h, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return None


def _upper_min(mp, c, bp):
    """min over lam >= 0 of the v_plus characteristic function (negative => real root)."""
    smax = min(EXP_CLAMP, max(50.0, 4 * math.log(1 + 1 / (abs(bp) * mp.r))))
    s = np.concatenate([np.linspace(0, 5, 2001), np.geomspace(5, smax, 2000)[1:]])
    lam = s / (c * mp.r)
    vals = _upper_h(lam, c, mp, bp)
    i = int(np.argmin(vals))
    return vals[i], lam[i]


def upper_speed(mp: ModelParams):
    """Speed c_upper above which the wave approaches v_plus with oscillations.

    Solves the tangency of the v_plus characteristic curves. Returns
    (inf, nan) when every speed admits a real root, i.e. r <= r_under, r = 0
    or b'(v_plus) = 0.
    """
    mp.require_in_scope()
    bp = float(birth_prime(equilibria(mp).v_plus, mp))
    ru = r_under(mp)
    if mp.r == 0 or bp >= 0 or ru is None or mp.r <= ru:
        return math.inf, math.nan
    m = lambda c: _upper_min(mp, c, bp)[0]  # noqa: E731
    lo = 1e-6
    if m(lo) > 0:
        raise NumericalError("upper_speed: no real root even at vanishing speed")
    hi = 1.0
    while m(hi) <= 0:
        hi *= 2
        if hi > 1e7:
            return math.inf, math.nan
    c = brentq(m, lo, hi, xtol=1e-13, rtol=1e-14, maxiter=500)
    lam = _upper_min(mp, c, bp)[1]
    c, lam, res = _polish_upper(mp, c, lam, bp)
    if res > ROOT_RTOL:
        raise NumericalError("upper_speed: tangency not resolved", residual=res)
    return c, lam


def upper_residual(mp, c, lam, bp=None):
    if bp is None:
        bp = float(birth_prime(equilibria(mp).v_plus, mp))
    e = math.exp(lam * c * mp.r)
    h1 = -c * lam - mp.D * lam**2 + mp.delta - bp * e
    h2 = -c - 2 * mp.D * lam - bp * c * mp.r * e
    return h1, h2


def _polish_upper(mp, c, lam, bp):
    D, r = mp.D, mp.r
    scale = mp.delta + abs(bp)
    for _ in range(50):
        h1, h2 = upper_residual(mp, c, lam, bp)
        res = max(abs(h1) / scale, abs(h2) / c)
        if res < 1e-14:
            break
        e = math.exp(lam * c * r)
        J = np.array(
            [
                [-lam - bp * lam * r * e, -c - 2 * D * lam - bp * c * r * e],
                [-1 - bp * r * e * (1 + lam * c * r), -2 * D - bp * (c * r) ** 2 * e],
            ]
        )
        try:
            dc, dl = np.linalg.solve(J, [-h1, -h2])
        except np.linalg.LinAlgError:
            break
        c, lam = c + dc, lam + dl
    h1, h2 = upper_residual(mp, c, lam, bp)
    return c, lam, max(abs(h1) / scale, abs(h2) / c)


def r0_intersection(mp: ModelParams):
    """Delay where c_star(r) meets c_upper(r); searched on [r_under, 10 r_under].

    Only meaningful for e < p/delta <= e^2; None when absent.
    """
    if mp.regime is not Regime.MODERATE:
        return None
    ru = r_under(mp)
    if ru is None:
        return None

    def diff(r):
        m = mp.replace(r=float(r))
        cs, _ = min_speed(m)
        try:
            cu, _ = upper_speed(m)
        except NumericalError:
            # only happens just above r_under where c_upper is huge
            return 1e12
        return min(cu, 1e12) - cs

    lo, hi = ru * (1 + 1e-6), 10 * ru
    if diff(hi) > 0:
        return None
    # c_upper is +inf at r_under itself; move lo until finite and positive
    return brentq(diff, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200)


def spectral_profile(mp: ModelParams) -> SpectralProfile:
    mp.require_in_scope()
    cs, ls = min_speed(mp)
    ru, rb = delay_thresholds(mp)
    cu, lu = upper_speed(mp)
    return SpectralProfile(cs, ls, ru, rb, cu, lu, r0_intersection(mp), mp.regime)


def classify_regime(mp: ModelParams, c: float, star=None) -> Shape:
    """Theoretical shape of the wave with speed c at delay mp.r."""
    mp.require_in_scope()
    c_star = (star or min_speed(mp))[0]
    if c < c_star * (1 - 1e-9) - BOUNDARY_TOL:
        raise PreconditionError(f"c = {c!r} below c_star = {c_star!r}")
    ru, rb = delay_thresholds(mp)
    r = mp.r
    if mp.regime is Regime.STRONG:
        if r >= rb - BOUNDARY_TOL:
            return Shape.NOWAVE
        if r <= ru + BOUNDARY_TOL:
            return Shape.MONOTONE
        return Shape.OSCILLATORY
    if r <= ru + BOUNDARY_TOL:
        return Shape.MONOTONE
    cu, _ = upper_speed(mp)
    if c <= cu + BOUNDARY_TOL:
        return Shape.MONOTONE
    return Shape.OSCILLATORY


def wave_spec(mp: ModelParams, c="critical", lam=None, star=None) -> WaveSpec:
    """Moving-frame speed and weight exponent; midpoint of (lambda1, lambda2) by default."""
    cs, ls = star if star is not None else min_speed(mp)
    if isinstance(c, str):
        if c != "critical":
            raise PreconditionError(f"unknown speed selector {c!r}")
        c = cs
    c = float(c)
    if abs(c - cs) <= max(BOUNDARY_TOL, 1e-12 * cs):
        return WaveSpec(cs, ls, True)
    if c < cs:
        raise PreconditionError(f"c = {c!r} below critical speed {cs!r}")
    l1, l2 = lambda_pair(mp, c, star=(cs, ls))
    if lam is None:
        lam = 0.5 * (l1 + l2)
    elif not l1 < lam < l2:
        raise PreconditionError(f"lambda must lie in ({l1}, {l2})")
    if not gap(lam, c, mp) > 0:
        raise NumericalError("characteristic gap not positive at chosen lambda")
    return WaveSpec(c, float(lam), False)


def mu0(ws: WaveSpec, mp: ModelParams) -> float:
    """c lam + delta - D lam^2 - p exp(-lam c r): zero-mode damping margin."""
    return float(gap(ws.lam, ws.c, mp))


def mu_bound(ws: WaveSpec, mp: ModelParams) -> float:
    """Upper bound min{delta, mu0} for the exponential convergence rate."""
    return min(mp.delta, mu0(ws, mp))


def weight(ws: WaveSpec, xi):
    """exp(-2 lam xi) with the exponent clamped to +-700; returns (value, clamped)."""
    x = -2.0 * ws.lam * np.asarray(xi, dtype=float)
    clamped = bool(np.any(np.abs(x) > EXP_CLAMP))
    return np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP)), clamped
