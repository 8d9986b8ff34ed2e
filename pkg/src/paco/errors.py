"""Exception types shared across the package.

Measurement errors may carry the attribute kind that failed in ``kind``
(set by ``measure_all`` when it dispatches per-attribute work).
"""

from __future__ import annotations


class PacoError(Exception):
    """Base class for every error raised by this package."""

    kind = None


class EmptySummary(PacoError):
    """Summary tokenized to zero tokens where at least one is required."""


class EmptyTopic(PacoError):
    """Topic measurement requested with no topic words."""


class UnknownSpeaker(PacoError):
    """Speaker target names a speaker with no utterances."""


class MissingAttribute(PacoError):
    """A measured vector does not cover a requested attribute."""


class ProviderFailure(PacoError):
    """An embedding/NER provider call failed or returned malformed data."""


class PolicyFailure(PacoError):
    """The text-generation policy failed after configured retries."""


class EmptyCompletion(PolicyFailure):
    """The policy returned blank text where a summary was required."""


class HeuristicUnavailable(PacoError):
    """Value mode needs yes-probability scoring but the policy lacks it."""


class MissingBinding(PacoError):
    """A prompt template placeholder has no binding; names the placeholder."""

    def __init__(self, placeholder: str):
        super().__init__(placeholder)
        self.placeholder = placeholder


class PlanParseFailure(PacoError):
    """No usable attribute plan could be parsed from the model output."""


class DepthExceeded(PacoError):
    """Attempt to expand a node at maximum tree depth."""


class RootGenerationFailure(PacoError):
    """Initial summary generation failed; the search cannot start."""


class SchemaError(PacoError):
    """A corpus record violates the JSONL schema; message carries the line."""


class DuplicateId(SchemaError):
    """Two corpus records share an id."""


class EmptyText(PacoError):
    """ROUGE requested on text with no tokens."""
