"""
Exception hierarchy for the padyn toolkit.
Every error raised by the services derives from PadicError.
"""

from typing import Optional


class PadicError(Exception):
    """Base class for all toolkit errors."""


class InvalidPrimeError(PadicError, ValueError):
    """The prime context is not a prime or has a non-positive precision."""


class ContextMismatchError(PadicError):
    """Two values from different prime contexts were combined."""


class PadicDivisionByZeroError(PadicError, ZeroDivisionError):
    """Division by the zero element."""


class UnsupportedPrimeError(PadicError):
    """The operation is not supported for this prime (p = 2 square roots)."""


class DegenerateLeadingCoefficientError(PadicError, ValueError):
    """A quadratic was given with a zero leading coefficient."""


class InvalidParametersError(PadicError, ValueError):
    """Map or instance parameters violate their constructor constraints."""


class PoleHitError(PadicError):
    """The map was evaluated at its pole."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class WrongCaseError(PadicError):
    """The operation requires a different case of the classification."""


class DegenerateParamsError(PadicError):
    """Parameters admit no object of the requested kind (a + b = 0)."""


class PreconditionError(PadicError, ValueError):
    """An operation precondition does not hold."""


class ResidueModelInvalidError(PadicError):
    """A modeled denominator is not a unit modulo p."""


class IdentityViolationError(PadicError):
    """A closed form or identity cross-check disagreed."""


class DisjointnessFailureError(IdentityViolationError):
    """The two balls of an invariant-set candidate intersect."""
