"""Exception and warning taxonomy shared by every pipeline stage."""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for all errors raised by this package.

    ``stage`` identifies the pipeline stage that surfaced the error; stages
    that forward errors from lower layers fill it in if it is still unset.
    """

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


# --- model gateway ---

class BackendUnavailable(HarnessError):
    """Backend could not be reached (after all retries) or refused the call."""

    def __init__(self, message: str, *, attempts: int = 0, stage: str | None = None):
        super().__init__(message, stage=stage)
        self.attempts = attempts


class MalformedBackendReply(HarnessError):
    """Backend replied, but the body violates the wire protocol."""


class BackendContractViolation(HarnessError):
    """Backend broke a cross-call contract, e.g. embedding dimensionality."""


class PromptTooLong(HarnessError):
    """Assembled prompt exceeds the configured context budget."""

    def __init__(self, message: str, *, length: int, budget: int,
                 region_count: int | None = None):
        super().__init__(message)
        self.length = length
        self.budget = budget
        self.region_count = region_count


class CacheMiss(HarnessError):
    """Replay mode found no recorded response for the request key."""

    def __init__(self, message: str, *, key: str, role: str):
        super().__init__(message)
        self.key = key
        self.role = role


# --- evaluator / parsing ---

class ParseFailure(HarnessError):
    """A completion resisted extraction; carries the replies for inspection."""

    def __init__(self, message: str, *, replies: tuple[str, ...] = ()):
        super().__init__(message)
        self.replies = replies


class RatingParseFailure(ParseFailure):
    """No usable integer rating could be extracted, even after a repair ask."""


class AtomicParseFailure(ParseFailure):
    """The four atomic counts could not be extracted, even after a repair ask."""


# --- baselines ---

class DegenerateEmbedding(HarnessError):
    """An all-zero embedding has no direction; cosine is undefined."""


class EmptyText(HarnessError):
    """Text reduced to zero tokens after normalization."""


# --- stats ---

class DegenerateSeries(HarnessError):
    """A rank statistic is undefined because one series is entirely tied."""


class InsufficientOverlap(HarnessError):
    """Agreement needs at least one unit rated by two or more raters."""


class InvalidRange(HarnessError):
    """Normalization bounds must satisfy lo < hi."""


# --- datasets ---

class ValidationError(HarnessError):
    """A dataset line failed schema or range validation."""

    def __init__(self, message: str, *, line: int, field: str | None = None):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.field = field


class DuplicateKey(HarnessError):
    """A unique identifier appeared more than once in a dataset file."""


class IntegrityError(HarnessError):
    """A record references an id that does not exist in its parent file."""


class InsufficientRecords(HarnessError):
    """A sample of size k was requested from fewer than k records."""


# --- warnings ---

class HarnessWarning(UserWarning):
    """Base class for recoverable conditions worth surfacing."""


class ClampWarning(HarnessWarning):
    """A value outside its legal range was clamped rather than rejected."""


class DuplicateTagWarning(HarnessWarning):
    """A tagged reply repeated a tag; the first occurrence wins."""


class SkippedWarning(HarnessWarning):
    """A record or variant was skipped; the run continued without it."""
