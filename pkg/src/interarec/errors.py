"""Exception hierarchy shared across the package."""

from __future__ import annotations


class InteraRecError(Exception):
    """Base class for all package-specific errors."""


# --- catalog ---------------------------------------------------------------

class DuplicateIdError(InteraRecError):
    """Two catalog records share the same item_id."""


class InvalidPriceError(InteraRecError):
    """Price is negative or non-finite."""


class MissingFieldError(InteraRecError):
    """A required field (item_id or price) is absent."""


# --- sessions --------------------------------------------------------------

class OutOfOrderTimestampError(InteraRecError):
    """Appended event does not advance the session clock."""


class MalformedLineError(InteraRecError):
    """A line in a line-delimited file could not be decoded.

    Carries the 1-based line number in ``line_no``.
    """

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class MissingScreenshotKeyError(InteraRecError):
    """Strict loading found a screenshot key with no stored image."""


class InvalidWindowError(InteraRecError):
    """Session truncation window must be at least 1."""


# --- summarizer ------------------------------------------------------------

class EmptyCategoryListError(InteraRecError):
    """Prompt construction requires at least one category."""


class InvalidBatchSizeError(InteraRecError):
    """Batch size must be at least 1."""


class SummaryParseError(InteraRecError):
    """No usable JSON object found in a backend response."""


class BackendUnavailableError(InteraRecError):
    """Summarizer backend unreachable, unauthenticated, or misconfigured."""


class MissingFixtureError(BackendUnavailableError):
    """Mock backend has no fixture for the requested prompt/batch."""


class NoScreenshotsError(InteraRecError):
    """Session has no screenshots to summarize."""


# --- choice model / optimization -------------------------------------------

class ItemNotOfferedError(InteraRecError):
    """Choice probability requested for an item outside the assortment."""


class UnknownItemError(InteraRecError):
    """Item is missing from the catalog or the parameter vector."""


class NeverOfferedError(InteraRecError):
    """Estimation requested for an item that appears in no offered set."""


class TooLargeError(InteraRecError):
    """Exhaustive enumeration refused: filtered universe exceeds the cap."""


class DegenerateDataWarning(UserWarning):
    """Estimated weight hit the upper clamp (reported, never silent)."""


# --- re-ranking ------------------------------------------------------------

class DimensionMismatchError(InteraRecError):
    """Cosine similarity requires equal-dimension vectors."""


class ProviderUnavailableError(InteraRecError):
    """Embedding provider unreachable or misconfigured."""


# --- session models ---------------------------------------------------------

class EmptyTrainingSetError(InteraRecError):
    """Model training requires at least one session."""


class UntrainedModelError(InteraRecError):
    """Prediction requested from a model that was never trained."""


class UnsortedScoresError(InteraRecError):
    """Prediction entries are not sorted by score descending."""


class DuplicateItemError(InteraRecError):
    """Prediction entries contain a repeated item_id."""


# --- evaluation -------------------------------------------------------------

class MissingSummariesError(InteraRecError):
    """Re-ranking requested but no summary available for a test session."""


class EmptyTestSplitError(InteraRecError):
    """Train/test split produced no test sessions."""


# --- service ----------------------------------------------------------------

class SessionNotFoundError(InteraRecError):
    """No stored session with the requested id."""


class ValidationRejectedError(InteraRecError):
    """Constraints failed validation; the report rides along.

    ``report`` is the :class:`~interarec.constraints.ValidationReport`.
    """

    def __init__(self, report):
        issues = ", ".join(i.code for i in report.issues)
        super().__init__(f"constraints rejected: {issues}")
        self.report = report


class NoModelConfiguredError(InteraRecError):
    """Re-rank mode requested but no session model is configured."""
