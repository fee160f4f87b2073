"""Exception hierarchy.

Three branches matter for the CLI exit codes: DataError (bad input
records), BackendError (scoring model trouble), ConfigError (bad
run configuration). Everything else derives from TripleMineError.
"""


class TripleMineError(Exception):
    """Base class for all errors raised by this package."""


class DataError(TripleMineError):
    """A malformed or unusable input record.

    ``line_number`` is attached when the record came from a file.
    """

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class UnknownRelationError(DataError):
    """Relation identifier not present in the bundled registry."""

    def __init__(self, relation, line_number=None):
        super().__init__(f"unknown relation {relation!r}", line_number)
        self.relation = relation


class EmptyPhraseError(DataError):
    """Phrase contains no tokens after normalization."""


class TransformNotApplicable(TripleMineError):
    """Grammatical transform preconditions not met for this phrase."""


class SpanNotFoundError(TripleMineError):
    """Head/tail word positions could not be recovered from a sentence."""


class BackendError(TripleMineError):
    """Base class for scoring-backend failures."""


class TransportError(BackendError):
    """Remote backend unreachable or persistently unavailable."""


class LengthError(BackendError):
    """Sentence exceeds the backend token cap. Never truncated silently."""


class MissingEntryError(BackendError):
    """Lookup backend has no entry for the query and no default."""


class UnknownTokenError(BackendError):
    """Target token outside the backend vocabulary."""


class QueryError(BackendError):
    """Backend rejected the query as malformed (HTTP 400)."""


class InsufficientDataError(DataError):
    """Too few points to fit the mixture model."""


class DegenerateDataError(DataError):
    """Score distribution has no spread to cluster."""


class SamplingError(DataError):
    """Negative sampling cannot produce a distinct corrupted triple."""


class LambdaSearchError(TripleMineError):
    """Every grid point failed during the lambda search."""


class ConfigError(TripleMineError):
    """Invalid or inconsistent run configuration."""
