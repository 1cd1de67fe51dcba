"""Numerical laboratory for delayed Nicholson's blowflies fronts."""

from .errors import (
    BlowflyError,
    ConfigError,
    ConvergenceError,
    FitError,
    NumericalError,
    PreconditionError,
    RegimeError,
    StabilityError,
)
from .model import Equilibria, ModelParams, Regime, birth, birth_prime, equilibria

__version__ = "0.1.0"

__all__ = [
    "BlowflyError",
    "ConfigError",
    "ConvergenceError",
    "FitError",
    "NumericalError",
    "PreconditionError",
    "RegimeError",
    "StabilityError",
    "Equilibria",
    "ModelParams",
    "Regime",
    "birth",
    "birth_prime",
    "equilibria",
]
