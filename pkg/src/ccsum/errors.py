"""Exception types raised across the pipeline.

All errors derive from CcsumError so callers can catch the whole family.
Provider errors carry a ``retriable`` flag that the service layer forwards
to clients.
"""

from __future__ import annotations


class CcsumError(Exception):
    """Base class for all errors raised by this package."""

    retriable = False


# --- parsing ---------------------------------------------------------------


class MalformedInput(CcsumError):
    """Raw input could not be decoded or does not match the declared format."""


class MissingField(MalformedInput):
    """A required document field (paper_id, body) is absent."""


class DanglingRef(MalformedInput):
    """A citation span references a ref key absent from the bibliography."""


# --- embedding -------------------------------------------------------------


class EmbeddingUnavailable(CcsumError):
    """The embedding backend failed (network, timeout, bad response)."""

    retriable = True


class DimensionMismatch(CcsumError):
    """Vectors of different dimensionality were combined."""


class ZeroVector(CcsumError):
    """Cosine similarity is undefined for an all-zero vector."""


# --- retrieval -------------------------------------------------------------


class DuplicateUnitId(CcsumError):
    """Two index units share the same unit_id."""


class UnknownUnit(CcsumError):
    """A unit_id was queried that the index does not contain."""


class LengthMismatch(CcsumError):
    """Parallel sequences (rankings/weights, rating vectors) differ in length."""


class TargetUnavailable(CcsumError):
    """The cited paper's full text is not available for retrieval."""


# --- summarization ---------------------------------------------------------


class EmptyInput(CcsumError):
    """A prompt was requested for empty input text."""


class ProviderTimeout(CcsumError):
    """The generation provider did not answer in time; safe to retry."""

    retriable = True


class ProviderRejected(CcsumError):
    """The generation provider refused the request; carries its message."""


# --- evaluation ------------------------------------------------------------


class UnknownCriterion(CcsumError):
    """Quality criterion outside {coverage, focus, relevance}."""


class MalformedResponse(CcsumError):
    """A judge response did not follow the expected score form."""


class ScoreOutOfRange(CcsumError):
    """A rating fell outside the 1-5 scale."""


class MissingCriterion(CcsumError):
    """A judge response lacks a score line for an expected criterion."""


class DegenerateMarginals(CcsumError):
    """Weighted kappa is undefined: zero expected but nonzero observed disagreement."""


# --- service ---------------------------------------------------------------


class NotFound(CcsumError):
    """Lookup of an unknown paper or citance id."""


class Conflict(CcsumError):
    """Write-once cache key already holds different content."""


class StorageFailure(CcsumError):
    """The persistent cache store could not be written."""
