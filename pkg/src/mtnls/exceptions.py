"""Exception hierarchy.

Each class maps onto one CLI exit code (see :mod:`mtnls.cli`).
"""


class MTNLSError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MTNLSError, ValueError):
    """Invalid parameters or configuration values (exit code 2)."""


class UsageError(MTNLSError, ValueError):
    """Incompatible arguments, e.g. fields living on different bases."""


class DomainError(MTNLSError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class AmplitudeOverflowError(MTNLSError, FloatingPointError):
    """Exponential nonlinearity would overflow double precision (exit code 3).

    Attributes
    ----------
    max_amplitude : float
        Largest grid modulus that triggered the guard.
    time : float or None
        Simulation time at which the overflow was detected, if known.
    """

    def __init__(self, message, max_amplitude=float("nan"), time=None):
        super().__init__(message)
        self.max_amplitude = max_amplitude
        self.time = time


class NumericalError(MTNLSError, ArithmeticError):
    """An iterative numerical procedure failed to converge."""


class ConvergenceError(NumericalError):
    """A truncated series has a non-decaying tail at the truncation index."""


class ConsistencyError(MTNLSError, AssertionError):
    """An identity that must hold at finite dimension was violated."""


class EnsembleError(MTNLSError, RuntimeError):
    """Some ensemble trajectories failed; carries the partial result."""

    def __init__(self, message, failed_seeds=(), partial=None):
        super().__init__(message)
        self.failed_seeds = tuple(failed_seeds)
        self.partial = partial
