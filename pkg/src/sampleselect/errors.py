"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SampleSelectError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SampleSelectError, ValueError):
    """Invalid configuration, or a method requested on a backend that cannot serve it."""


class DegenerateCandidateError(SampleSelectError, ValueError):
    """An empty candidate was passed where a non-empty one is required."""


class RetryableError(SampleSelectError):
    """Transient transport failure; the operation may be retried."""


class ProtocolError(SampleSelectError):
    """A remote service answered with a malformed or incomplete payload."""


class RunError(SampleSelectError):
    """A generation run failed permanently (retries exhausted, or a bad server payload).

    ``partial_trace`` carries whatever the driver produced before the failure,
    or None when the failure happened before any round completed.
    """

    def __init__(self, message: str, partial_trace=None):
        super().__init__(message)
        self.partial_trace = partial_trace


class ScorerError(SampleSelectError):
    """An external scoring predicate failed mid-ranking."""


class UsageError(SampleSelectError):
    """Bad command-line usage or unreadable input files."""
