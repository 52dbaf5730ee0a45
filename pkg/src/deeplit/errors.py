"""Exception hierarchy shared across pipeline stages."""

from __future__ import annotations


class DeepLitError(Exception):
    """Base class for all package errors."""


class MissingIdentity(DeepLitError, ValueError):
    """A provider payload carries neither an identifier nor a title."""


class InvalidRecord(DeepLitError, ValueError):
    pass


class EmptyAfterCleaning(DeepLitError, ValueError):
    pass


class MalformedResponse(DeepLitError):
    """An LLM response could not be parsed into the expected structure."""


class UpstreamError(DeepLitError):
    """Transport failure or non-retryable HTTP error from a remote service."""


class RateLimited(UpstreamError):
    """HTTP 429 persisted after all retries."""


class MalformedPayload(UpstreamError):
    pass


class NotFound(DeepLitError):
    pass


class OfflineCacheMiss(DeepLitError):
    """Offline mode was asked for a request that is not in the cache."""


class CandidateSetMismatch(DeepLitError, ValueError):
    pass


class EmptyGroundTruth(DeepLitError, ValueError):
    pass


class EmptySlice(DeepLitError, ValueError):
    pass


class MissingClusterLabel(DeepLitError, KeyError):
    pass


class Unresolvable(DeepLitError):
    """One side of a (query, candidate) pair has no resolved authors."""


class IncompleteJudging(DeepLitError):
    pass


class MissingArtifacts(DeepLitError):
    def __init__(self, stage: str, detail: str = "") -> None:
        self.stage = stage
        super().__init__(f"missing artifacts for stage {stage!r}" + (f": {detail}" if detail else ""))


class ConfigError(DeepLitError, ValueError):
    pass
