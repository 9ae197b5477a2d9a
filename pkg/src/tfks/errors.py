"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries the code it
should produce.
"""

from __future__ import annotations


class TFKSError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(TFKSError, ValueError):
    """Bad input: out-of-range parameters, malformed grids, wrong shapes."""


class RegimeError(ValidationError):
    """Parameters do not satisfy the regime a case or generator requires."""

    def __init__(self, message: str, constraint: str = ""):
        super().__init__(message)
        self.constraint = constraint


class FrameError(ValidationError):
    """A trajectory was passed in the wrong frame (original vs gauged)."""


class DomainExitError(ValidationError):
    """A group flow moves sample points outside the available data."""


class NumericalError(TFKSError):
    """Numerical failure: blow-up, divergence, singular systems."""

    exit_code = 3


class InstabilityError(NumericalError):
    def __init__(self, message: str, step: int | None = None, norm: float | None = None):
        super().__init__(message)
        self.step = step
        self.norm = norm


class ConvergenceError(NumericalError):
    def __init__(self, message: str, iterations: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class FormalIdentityRefusal(TFKSError):
    """Refusal to solve a system that rests on an unvalidated formal identity."""

    exit_code = 2
