"""Exception types shared across the package."""

from __future__ import annotations


class PhishGraphError(Exception):
    """Base class for all package errors."""


class MalformedUrl(PhishGraphError):
    """Raised when no host can be identified in a URL string."""


class DegenerateCorpus(PhishGraphError):
    """Raised when a corpus is too small to fit anything on."""


class MissingResource(PhishGraphError):
    """Raised when a required feature resource set is empty."""


class MalformedRecord(PhishGraphError):
    """Raised (in strict contexts) for a structurally bad input record."""


class ConflictingLabel(PhishGraphError):
    """Raised when one URL appears with both a phishy and a benign label."""


class EmptyGraph(PhishGraphError):
    """Raised when graph construction produces zero edges."""


class InsufficientData(PhishGraphError):
    """Raised when a label class is too small to split."""


class MissingEmbedding(PhishGraphError):
    """Raised when a vertex needed by the inference has no vector."""


class NoObservedVertices(PhishGraphError):
    """Raised when inference starts on a graph without observed vertices."""


class UnknownVertex(PhishGraphError):
    """Raised when a queried vertex does not exist in the graph."""


class NoDonor(PhishGraphError):
    """Raised when an evasion method has no benign donor part available."""


class EmptyTestSet(PhishGraphError):
    """Raised when metrics are requested over zero predictions."""
