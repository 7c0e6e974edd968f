"""Exception hierarchy for the prognosis engine.

Validation errors cover malformed inputs and contract violations;
numerical errors cover estimation failures. The CLI maps the two
families to distinct exit codes.
"""

from __future__ import annotations


class PrognosError(Exception):
    """Base class for all engine errors."""


class ValidationError(PrognosError):
    """Invalid input data or arguments."""


class NumericalError(PrognosError):
    """Estimation or numerical failure."""


# --- cohort ---------------------------------------------------------------

class MissingColumn(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class OutOfRangeValue(ValidationError):
    pass


class EmptyCohort(ValidationError):
    pass


class NoFeatures(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# --- survival core --------------------------------------------------------

class NoEvents(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class Nonconvergence(NumericalError):
    """Newton iteration failed to converge; carries partial diagnostics."""

    def __init__(self, message: str, model=None):
        super().__init__(message)
        self.model = model


class SingularInformation(NumericalError):
    pass


class MonotoneLikelihood(NumericalError):
    """Coefficients diverging, typically complete separation."""


class NotConverged(NumericalError):
    pass


class SchemaViolation(ValidationError):
    """Malformed request field; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.detail = message


class ModelDataMismatch(ValidationError):
    pass


# --- feature selection ----------------------------------------------------

class EmptyPath(ValidationError):
    pass


# --- metrics --------------------------------------------------------------

class LengthMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class GridOutOfRange(ValidationError):
    pass


class DegenerateResample(NumericalError):
    """Metric undefined on a bootstrap resample; the resample is redrawn."""


class ZeroCensoringWeight(UserWarning):
    """Censoring survival hit zero inside the requested grid."""


class EmptyGroup(UserWarning):
    """An expected calibration group has no members; it is skipped."""


# --- clinical scales ------------------------------------------------------

class ScoreOutOfRange(ValidationError):
    pass


class MissingGenotype(ValidationError):
    pass


class MissingGrades(ValidationError):
    pass
