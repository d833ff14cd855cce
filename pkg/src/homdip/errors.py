"""Exception types raised across the package."""


class HomDipError(Exception):
    """Base class for all errors raised by homdip."""


class InvalidParameterError(HomDipError, ValueError):
    pass


class MalformedInputError(HomDipError, ValueError):
    pass


class EmptySpectrumError(HomDipError, ValueError):
    pass


class DomainError(HomDipError, ValueError):
    """Frequency grid does not cover a spectral support."""


class NumericError(HomDipError, ArithmeticError):
    """Non-finite integrand or a failed internal consistency check."""


class NoDipError(HomDipError, ValueError):
    pass


class RangeError(HomDipError, ValueError):
    """Half-depth crossings fall outside the sampled delay range."""


class IdentifiabilityError(HomDipError, ValueError):
    pass


class ConvergenceError(HomDipError, RuntimeError):
    """Optimizer hit its iteration limit; ``best`` holds the best point found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(HomDipError, ValueError):
    """Invalid run configuration; the message names the offending key."""
