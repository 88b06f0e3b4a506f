"""Exception taxonomy shared by every module.

Grouped by how the CLI maps them to exit codes: validation-type errors
exit 2, budget-type errors exit 3.
"""

from __future__ import annotations


class HamlabError(Exception):
    """Base class for all package errors."""


# -- validation family (exit 2) ----------------------------------------


class ParseError(HamlabError):
    """Input file or text does not parse against its format."""


class ValidationError(HamlabError):
    """Parsed data violates a structural invariant (Hermiticity, bounds...)."""


class SizeError(HamlabError):
    """Instance exceeds a hard size cap of the dense machinery."""


class DomainError(HamlabError):
    """Scalar argument outside the mathematically allowed domain."""


class PrecisionError(HamlabError):
    """Extended-precision conversion failed its reconstruction check."""


class UnsupportedObservable(HamlabError):
    """Observable exceeds what a state backend can evaluate."""


class NumericalError(HamlabError):
    """A numeric result left its tolerated range (not a mere rounding blip)."""


class CanonicalizationError(HamlabError):
    """MPS canonical form could not be established."""


class PenaltyTooLarge(HamlabError):
    """Clock penalty eps violates the eps <= c/T^3 precondition."""


class AccessError(HamlabError):
    """Sampling-access query budget exhausted."""


class DimensionMismatch(HamlabError):
    """Operands live on different Hilbert spaces."""


class UnknownGate(HamlabError):
    """Circuit references a gate name the simulator does not know."""


# -- budget family (exit 3) ---------------------------------------------


class BudgetExceeded(HamlabError):
    """An enumeration or sampling budget cap was hit before completion."""


class DegreeOverflow(HamlabError):
    """Polynomial construction would exceed the configured degree cap."""


VALIDATION_ERRORS = (
    ParseError,
    ValidationError,
    SizeError,
    DomainError,
    PrecisionError,
    UnsupportedObservable,
    NumericalError,
    CanonicalizationError,
    PenaltyTooLarge,
    AccessError,
    DimensionMismatch,
    UnknownGate,
    FileNotFoundError,
)

BUDGET_ERRORS = (BudgetExceeded, DegreeOverflow)
