"""Exception types shared across the package.

Every error that callers are expected to branch on gets its own class here;
anything else is a plain ValueError/TypeError at the call site.
"""

from __future__ import annotations


class ArchivistError(Exception):
    """Base class for package-specific errors."""


class InvalidArgumentError(ArchivistError, ValueError):
    """An argument violated a documented precondition."""


class NotFoundError(ArchivistError, LookupError):
    """A referenced record does not exist."""


class IngestError(ArchivistError):
    """Corpus ingestion rejected the whole batch.

    Carries the line number of the offending record (1-based) when the
    failure is tied to a specific input line.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyCorpusError(ArchivistError):
    """An index build was attempted over zero documents."""


class ExecutionFailedError(ArchivistError):
    """A guard-accepted SQL statement failed at runtime; carries the engine message."""


class ExtractionFailedError(ArchivistError):
    """No SQL statement could be extracted from an LLM completion."""


class ProviderError(ArchivistError):
    """An embedding provider call failed.

    ``retryable`` hints whether a retry is worthwhile (network/5xx) or not
    (auth, bad request).
    """

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class PartialIndexError(ArchivistError):
    """A batch indexing run stopped midway; ``completed`` records were stored.

    The operation is resumable: records already stored are upserted on rerun.
    """

    def __init__(self, message: str, completed: int):
        super().__init__(f"{message} (completed {completed} records)")
        self.completed = completed


class GatewayError(ArchivistError):
    """An LLM gateway call failed; ``category`` is one of
    timeout / network / auth / http / offline."""

    def __init__(self, message: str, category: str = "network"):
        super().__init__(message)
        self.category = category


class StubMissError(ArchivistError):
    """The scripted stub had no canned response for a request fingerprint.

    Deliberately NOT a GatewayError: a stub miss is a test-setup bug and must
    never be absorbed by production fallback paths.
    """

    def __init__(self, fp: str, preview: str):
        super().__init__(f"no scripted response for fingerprint {fp}; request was:\n{preview}")
        self.fingerprint = fp


class IndexFormatError(ArchivistError):
    """A persisted index file has an unknown layout or mismatched version."""


class UndefinedResultError(ArchivistError):
    """A statistic is undefined for the given input (e.g. <2 pairable values)."""


class DatasetMismatchError(ArchivistError):
    """An evaluation dataset references entries missing from the corpus."""
