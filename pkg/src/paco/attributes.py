"""The five controllable attributes and their measured values.

Deterministic attributes (extractiveness, length, specificity) have exact
numeric targets and are scored by absolute deviation. Non-deterministic
attributes (topic, speaker) are similarity alignments in [0, 1] where
larger is better.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    EmptySummary,
    EmptyTopic,
    PacoError,
    ProviderFailure,
    UnknownSpeaker,
)


class AttributeKind(Enum):
    """Controllable summary attributes, in canonical action order."""

    EXTRACTIVENESS = "extractiveness"
    LENGTH = "length"
    SPECIFICITY = "specificity"
    TOPIC = "topic"
    SPEAKER = "speaker"

    @property
    def code(self) -> str:
        return _SHORT_CODES[self]

    @property
    def deterministic(self) -> bool:
        return self in DETERMINISTIC_KINDS


_SHORT_CODES = {
    AttributeKind.EXTRACTIVENESS: "ext",
    AttributeKind.LENGTH: "len",
    AttributeKind.SPECIFICITY: "spc",
    AttributeKind.TOPIC: "top",
    AttributeKind.SPEAKER: "spk",
}

CANONICAL_ORDER: tuple[AttributeKind, ...] = tuple(AttributeKind)
DETERMINISTIC_KINDS = (
    AttributeKind.EXTRACTIVENESS,
    AttributeKind.LENGTH,
    AttributeKind.SPECIFICITY,
)
NONDETERMINISTIC_KINDS = (AttributeKind.TOPIC, AttributeKind.SPEAKER)

_NAME_LOOKUP = {k.value: k for k in AttributeKind}
_NAME_LOOKUP.update({code: kind for kind, code in _SHORT_CODES.items()})


def kind_from_name(name: str) -> AttributeKind:
    """Resolve a full attribute name or short form, case-insensitively."""
    kind = _NAME_LOOKUP.get(name.strip().lower())
    if kind is None:
        raise KeyError(name)
    return kind


# Measured values keyed by requested kind. Extractiveness/specificity are
# percent in [0, 100], length is a word count, topic/speaker are in [0, 1].
AttributeVector = dict


@dataclass(frozen=True)
class AttributeTarget:
    """A single requested attribute and its target value.

    Deterministic kinds carry a number (length must be a positive integer);
    topic carries a tuple of topic words; speaker carries a speaker id.
    """

    kind: AttributeKind
    value: object

    def __post_init__(self):
        k, v = self.kind, self.value
        if k is AttributeKind.LENGTH:
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"length target must be a positive integer, got {v!r}")
        elif k.deterministic:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValueError(f"{k.value} target must be a number, got {v!r}")
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{k.value} target must be finite and non-negative")
        elif k is AttributeKind.TOPIC:
            words = tuple(v) if not isinstance(v, str) else (v,)
            if not words or not all(isinstance(w, str) and w.strip() for w in words):
                raise ValueError("topic target needs at least one non-empty word")
            object.__setattr__(self, "value", words)
        else:  # speaker
            if not isinstance(v, str) or not v.strip():
                raise ValueError("speaker target must be a non-empty speaker id")


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str


@dataclass(frozen=True)
class Document:
    """An input document with its requested attribute targets."""

    id: str
    text: str
    targets: tuple[AttributeTarget, ...]
    utterances: tuple[Utterance, ...] = ()
    reference_summary: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "utterances", tuple(self.utterances))
        seen = set()
        for t in self.targets:
            if t.kind in seen:
                raise ValueError(f"duplicate target for {t.kind.value}")
            seen.add(t.kind)
        spk = self.target_for(AttributeKind.SPEAKER)
        if spk is not None:
            labels = {u.speaker for u in self.utterances}
            if spk.value not in labels:
                raise ValueError(
                    f"speaker target {spk.value!r} not among utterance speakers"
                )

    def requested_kinds(self) -> tuple[AttributeKind, ...]:
        requested = {t.kind for t in self.targets}
        return tuple(k for k in CANONICAL_ORDER if k in requested)

    def target_for(self, kind: AttributeKind) -> AttributeTarget | None:
        for t in self.targets:
            if t.kind is kind:
                return t
        return None

    def speaker_utterances(self, speaker: str) -> list[str]:
        return [u.text for u in self.utterances if u.speaker == speaker]


# Tokens are maximal alphanumeric runs, keeping apostrophes that join two
# alphanumeric parts ("it's" stays one token). Underscore is excluded from
# \w on purpose.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*", re.UNICODE)


def token_spans(text: str) -> list[tuple[str, int, int]]:
    """Lowercased tokens with their character offsets in the original text."""
    return [(m.group(0).lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens in order; empty input yields an empty list."""
    return [tok for tok, _, _ in token_spans(text)]


def measure_extractiveness(summary: str, document_text: str) -> float:
    """Percent of summary tokens (with multiplicity) found in the document's
    token set."""
    summary_tokens = tokenize(summary)
    if not summary_tokens:
        raise EmptySummary("summary has no tokens")
    document_tokens = set(tokenize(document_text))
    hits = sum(1 for tok in summary_tokens if tok in document_tokens)
    return 100.0 * hits / len(summary_tokens)


def measure_length(summary: str) -> int:
    """Word count of the summary."""
    return len(tokenize(summary))


def measure_specificity(summary: str, ner) -> float:
    """Percent of summary tokens overlapping a named-entity span."""
    spans = token_spans(summary)
    if not spans:
        raise EmptySummary("summary has no tokens")
    try:
        entities = ner.entities(summary)
    except PacoError:
        raise
    except Exception as err:
        raise ProviderFailure(f"ner provider failed: {err}") from err
    covered = 0
    for _, start, end in spans:
        if any(ent.start < end and start < ent.end for ent in entities):
            covered += 1
    return 100.0 * covered / len(spans)


def measure_topic(summary: str, topic_words: Sequence[str], embedder) -> float:
    """Mean over (topic word, summary word) pairs of cosine similarity
    mapped to [0, 1] via (cos + 1) / 2."""
    words = tokenize(summary)
    if not words:
        raise EmptySummary("summary has no tokens")
    topics = [w for w in topic_words if w]
    if not topics:
        raise EmptyTopic("no topic words given")
    try:
        topic_vecs = np.asarray(embedder.embed(topics), dtype=float)
        word_vecs = np.asarray(embedder.embed(words), dtype=float)
    except PacoError:
        raise
    except Exception as err:
        raise ProviderFailure(f"embedding provider failed: {err}") from err
    cosines = topic_vecs @ word_vecs.T
    return float(np.clip((np.mean(cosines) + 1.0) / 2.0, 0.0, 1.0))


def measure_speaker(summary: str, utterances: Sequence[str], embedder) -> float:
    """Pair-score between the summary and the speaker's concatenated
    utterances."""
    if not utterances:
        raise UnknownSpeaker("target speaker has no utterances")
    try:
        score = embedder.pair_score(summary, " ".join(utterances))
    except PacoError:
        raise
    except Exception as err:
        raise ProviderFailure(f"embedding provider failed: {err}") from err
    return float(min(max(score, 0.0), 1.0))


def measure_all(summary: str, doc: Document, providers) -> AttributeVector:
    """Measure exactly the attributes the document requests.

    Per-attribute errors are re-raised with ``kind`` set to the failing
    attribute.
    """
    if not tokenize(summary):
        raise EmptySummary(f"empty summary for document {doc.id!r}")
    measured: AttributeVector = {}
    for kind in doc.requested_kinds():
        target = doc.target_for(kind)
        try:
            if kind is AttributeKind.EXTRACTIVENESS:
                value = measure_extractiveness(summary, doc.text)
            elif kind is AttributeKind.LENGTH:
                value = measure_length(summary)
            elif kind is AttributeKind.SPECIFICITY:
                value = measure_specificity(summary, providers.ner)
            elif kind is AttributeKind.TOPIC:
                value = measure_topic(summary, target.value, providers.embedder)
            else:
                texts = doc.speaker_utterances(target.value)
                value = measure_speaker(summary, texts, providers.embedder)
        except PacoError as err:
            err.kind = kind
            raise
        measured[kind] = value
    return measured
