"""Exception types shared across the package."""


class BlowflyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(BlowflyError, ValueError):
    pass


class RegimeError(BlowflyError, ValueError):
    """Parameters fall outside the ratio/delay regime an operation supports."""


class PreconditionError(BlowflyError, ValueError):
    pass


class NumericalError(BlowflyError, ArithmeticError):
    """A root finder or integrator failed; carries the last residual if known."""

    def __init__(self, msg, residual=None, step=None):
        super().__init__(msg)
        self.residual = residual
        self.step = step


class ConvergenceError(NumericalError):
    pass


class StabilityError(NumericalError):
    """A delayed evolution blew up past its guard threshold."""


class FitError(BlowflyError, ValueError):
    pass
