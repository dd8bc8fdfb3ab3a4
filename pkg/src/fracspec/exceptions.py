"""Exception types raised by :mod:`fracspec`."""


class FracspecError(Exception):
    """Base class for all package errors."""


class DomainError(FracspecError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class QuadratureError(FracspecError, RuntimeError):
    """Adaptive quadrature could not reach the requested accuracy."""


class ToleranceNotMetError(QuadratureError):
    """A validation oracle did not meet its tolerance.

    The best available estimate is kept in :attr:`estimate`.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class RankOverflowError(FracspecError, RuntimeError):
    """Low-rank approximation needs more terms than allowed."""


class NotPSDError(FracspecError, ValueError):
    """A matrix expected to be positive semidefinite has a negative pivot."""


class SingularSystemError(FracspecError, RuntimeError):
    """A linear system could not be factorized."""


class ConfigError(FracspecError, ValueError):
    """Invalid experiment configuration."""
