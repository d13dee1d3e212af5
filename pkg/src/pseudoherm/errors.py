"""Exception hierarchy.

Every error is either a :class:`ValidationError` (the input is malformed or
violates a precondition) or a :class:`NumericalError` (the input is well formed
but the requested computation has no acceptable numerical answer).  The CLI maps
the two families onto distinct exit codes.
"""

from __future__ import annotations


class PseudoHermError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PseudoHermError, ValueError):
    """Input rejected before any computation."""


class NumericalError(PseudoHermError, ArithmeticError):
    """Computation failed on well-formed input."""


class DimensionMismatch(ValidationError):
    pass


class NotFinite(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NotPositiveDefinite(NumericalError):
    def __init__(self, message: str, smallest_eigenvalue: float | None = None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class NonDiagonalizable(NumericalError):
    pass


class ComplexSpectrum(NumericalError):
    pass


class NotQuasiHermitian(ValidationError):
    pass


class IncompatibleMetric(ValidationError):
    pass


class NotIntertwiner(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class MixedGlobalState(ValidationError):
    pass


class BasisOverflow(NumericalError):
    pass


class NotPositive(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class SingularFrame(NumericalError):
    pass


class InconsistentData(ValidationError):
    pass


class InvalidPovm(ValidationError):
    pass


class IncompletePovm(InvalidPovm):
    pass


class NotLocalPovm(InvalidPovm):
    pass


class StepTooLarge(ValidationError):
    pass
