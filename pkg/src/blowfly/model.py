"""Nicholson's blowflies model: parameters, birth/death terms, equilibria."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RegimeError

E = math.e
E2 = math.e**2
# ratios within this relative distance of e or e^2 count as on the boundary
REGIME_RTOL = 1e-12


class Regime(enum.Enum):
    """Ratio regime of p/delta."""

    OUT_OF_SCOPE = "p/delta<=e"
    MODERATE = "e<p/delta<=e^2"
    STRONG = "p/delta>e^2"


@dataclass(frozen=True)
class Equilibria:
    v_minus: float
    v_plus: float


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of v_t = D v_xx - delta v + p v(t-r) exp(-a v(t-r))."""

    D: float = 1.0
    delta: float = 1.0
    p: float = E2
    a: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        for name in ("D", "delta", "p", "a", "r"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ConfigError(f"{name} must be a finite number, got {val!r}")
            object.__setattr__(self, name, float(val))
        for name in ("D", "delta", "p", "a"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.r < 0:
            raise ConfigError("r must be non-negative")

    def ratio(self) -> float:
        return self.p / self.delta

    @property
    def regime(self) -> Regime:
        q = self.ratio()
        if q <= E * (1 + REGIME_RTOL):
            return Regime.OUT_OF_SCOPE
        if q <= E2 * (1 + REGIME_RTOL):
            return Regime.MODERATE
        return Regime.STRONG

    def require_in_scope(self):
        if self.regime is Regime.OUT_OF_SCOPE:
            raise RegimeError(
                f"p/delta = {self.ratio():.6g} <= e: monotone regime, not covered"
            )

    @property
    def v_plus(self) -> float:
        return equilibria(self).v_plus

    def replace(self, **kw) -> "ModelParams":
        d = dict(D=self.D, delta=self.delta, p=self.p, a=self.a, r=self.r)
        d.update(kw)
        return ModelParams(**d)


def _check_nonneg(v):
    if np.any(np.asarray(v) < 0):
        raise ValueError("population must be non-negative")


def birth(v, mp: ModelParams):
    """b(v) = p v exp(-a v)."""
    _check_nonneg(v)
    return mp.p * v * np.exp(-mp.a * v)


def birth_prime(v, mp: ModelParams):
    """b'(v) = p (1 - a v) exp(-a v); bounded by p in modulus on v >= 0."""
    _check_nonneg(v)
    return mp.p * (1.0 - mp.a * v) * np.exp(-mp.a * v)


def birth_secant(phi, u, mp: ModelParams):
    """Slope (b(phi+u) - b(phi)) / u, evaluated without cancellation.

    Reduces to b'(phi) at u = 0. Arrays broadcast. No domain check: callers
    pass phi + u >= 0 up to rounding.
    """
    phi = np.asarray(phi, dtype=float)
    u = np.asarray(u, dtype=float)
    x = -mp.a * u
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(np.abs(x) < 1e-300, -mp.a, -mp.a * np.expm1(x) / np.where(x == 0, 1.0, x))
    return mp.p * np.exp(-mp.a * phi) * (phi * g + np.exp(x))


def birth_increment(phi, u, mp: ModelParams):
    """b(phi+u) - b(phi) with relative accuracy for tiny u."""
    return birth_secant(phi, u, mp) * u


def equilibria(mp: ModelParams) -> Equilibria:
    q = mp.ratio()
    if q <= 1.0:
        raise RegimeError(f"p/delta = {q:.6g} <= 1: no positive equilibrium")
    return Equilibria(0.0, math.log(q) / mp.a)
