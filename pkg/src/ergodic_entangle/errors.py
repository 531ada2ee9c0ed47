"""Exception hierarchy shared by every module."""


class ErgodicError(Exception):
    """Base class for all library errors."""


class ShapeError(ErgodicError, ValueError):
    """Matrix dimensions do not fit together."""


class DomainError(ErgodicError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(ErgodicError, ValueError):
    """Inconsistent tolerances or job configuration."""


class ContractViolation(ErgodicError):
    """A documented pre- or post-condition failed.

    ``residual`` carries the measured quantity when there is one (for
    example ``||U^* U - I||_F`` for a matrix that is not unitary).
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResourceError(ErgodicError):
    """A cost ceiling would be exceeded."""

    def __init__(self, message, estimate=None, ceiling=None):
        super().__init__(message)
        self.estimate = estimate
        self.ceiling = ceiling


class SizeError(ResourceError, ValueError):
    """Enumeration size guard tripped."""


class RangeError(ErgodicError, OverflowError):
    """Exact arithmetic left its supported integer range."""
