"""Exception hierarchy shared by all qhist modules."""

from __future__ import annotations


class QHistError(Exception):
    """Base class for every error raised by this package."""


class DimMismatchError(QHistError):
    """Matrix/vector shapes do not conform (non-square, wrong dimension, ...)."""


class NotHermitianError(QHistError):
    """Operator is not Hermitian within tolerance."""


class NotAProjectorError(QHistError):
    """Operator fails the Hermitian-idempotent test."""


class NotOrthogonalError(QHistError):
    """Two projectors of a decomposition have a nonzero product."""


class NotCompleteError(QHistError):
    """Projectors of a decomposition do not sum to the identity."""


class DuplicateLabelError(QHistError):
    """Decomposition labels are not unique."""


class IncompatibleFrameworksError(QHistError):
    """Refinement requested for decompositions that do not commute."""


class NotUnitaryError(QHistError):
    """Evolution operator fails the unitarity test."""


class BadDecompositionError(QHistError):
    """The given slot cannot be turned into a projective decomposition."""


class UnknownHistoryError(QHistError):
    """History labels do not belong to the family."""


class UnknownLabelError(QHistError):
    """An outcome label (or projector) is absent from a slot decomposition."""


class NotAPartitionError(QHistError):
    """Coarse-graining label groups do not partition the slot's labels."""


class HistoryLimitError(QHistError):
    """Enumerating the family would exceed the configured history cap."""


class BadTimesError(QHistError):
    """A time label is unknown, out of order, or otherwise unusable."""


class MismatchedScenarioError(QHistError):
    """Observers do not share dimension, grid, initial state, or evolutions."""


class NotCompatibleError(QHistError):
    """Observers' families failed the compatibility test; carries the report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class InconsistentFamilyError(QHistError):
    """Probabilistic reasoning was requested against an inconsistent family."""


class ZeroProbabilityConditionError(QHistError):
    """Conditioning event has (numerically) zero probability."""


class SizeCapError(QHistError):
    """Exhaustive scan refused: candidate set exceeds the configured cap."""


class ScenarioError(QHistError):
    """Problem in a scenario document; ``path`` points at the offending node."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class ScenarioParseError(ScenarioError):
    """The document is not well-formed JSON."""


class UnknownFieldError(ScenarioError):
    """The document contains a field this format does not define."""


class UnknownOperatorError(ScenarioError):
    """A named operator or state preset is not recognised."""
