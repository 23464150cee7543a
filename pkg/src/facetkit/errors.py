"""Exception types shared across the toolkit."""


class FacetKitError(Exception):
    """Base class for all toolkit errors."""


class EmptySetError(FacetKitError):
    """A facet set with zero facets was supplied where at least one is required."""


class EmptyTokenError(FacetKitError):
    """An empty token was passed to an embedding provider."""


class ProviderFailureError(FacetKitError):
    """An external embedding/scoring provider failed or returned a malformed response."""


class MissingHeaderError(FacetKitError):
    """A delimited input file lacks one or more required header columns."""


class SchemaMismatchError(FacetKitError):
    """A stored model's feature schema does not match the active feature extractor."""


class SingleClassTrainingError(FacetKitError):
    """Training data contains only one class."""


class NonFiniteLossError(FacetKitError):
    """Training loss became NaN or infinite (diverging learning rate)."""


class ProvenanceError(FacetKitError):
    """Predicted labels were supplied where human/weak labels are required."""


class EmptyClassError(FacetKitError):
    """A stratified split was requested but some class has no records."""


class EmptyTestSetError(FacetKitError):
    """Classifier evaluation was requested on an empty test set."""


class ZeroNError(FacetKitError):
    """A trinomial test was requested on zero comparisons."""


class EmptyInputError(FacetKitError):
    """A permutation test was requested on an empty value list."""


class NotQualifiedError(FacetKitError):
    """An annotator that is not qualified requested or submitted work."""


class AlreadyQualifiedError(FacetKitError):
    """A qualified annotator re-submitted qualification answers."""


class UnknownGoldSetError(FacetKitError):
    """Qualification was requested but no gold set is configured."""


class UnknownTaskError(FacetKitError):
    """A judgment referenced a task id the service does not know."""


class DuplicateJudgmentError(FacetKitError):
    """A second judgment arrived for the same (task, annotator, criterion)."""
