"""Embedding and named-entity providers.

Two families ship here: deterministic offline fallbacks that make the test
suite hermetic, and HTTP clients speaking the sidecar wire protocol
(POST /embed, /ner, /score; all UTF-8 JSON).
"""

from __future__ import annotations

import hashlib
import os
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

from .attributes import token_spans, tokenize
from .errors import ProviderFailure


@dataclass(frozen=True)
class EntitySpan:
    """A named-entity span in character offsets over the submitted text."""

    start: int
    end: int
    label: str


class EmbeddingProvider(ABC):
    @abstractmethod
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Unit-norm vectors, one row per input text."""

    @abstractmethod
    def pair_score(self, candidate: str, reference: str) -> float:
        """F-style similarity of candidate vs reference in [0, 1]."""


class NerProvider(ABC):
    @abstractmethod
    def entities(self, text: str) -> list[EntitySpan]:
        """Non-overlapping entity spans within the text bounds."""


class HashingEmbedder(EmbeddingProvider):
    """Feature-hash bag-of-words embedder; deterministic across processes.

    Each token hashes (blake2b, not the salted builtin ``hash``) to an index
    and a sign. Rows are unit-normalized; a text with no tokens maps to a
    fixed basis vector so the unit-norm invariant holds unconditionally.
    """

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim

    def _token_slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        return value % self.dim, 1.0 if (value >> 32) & 1 else -1.0

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=float)
        for row, text in enumerate(texts):
            for token in tokenize(text):
                idx, sign = self._token_slot(token)
                out[row, idx] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm == 0.0:
                out[row, 0] = 1.0
            else:
                out[row] /= norm
        return out

    def pair_score(self, candidate: str, reference: str) -> float:
        return token_f1(candidate, reference)


def token_f1(candidate: str, reference: str) -> float:
    """Clipped token-overlap F1; 0.0 when either side is empty."""
    cand = Counter(tokenize(candidate))
    ref = Counter(tokenize(reference))
    if not cand or not ref:
        return 1.0 if not cand and not ref else 0.0
    overlap = sum((cand & ref).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    return 2.0 * precision * recall / (precision + recall)


class HeuristicNer(NerProvider):
    """Capitalized non-sentence-initial tokens plus digit-bearing tokens."""

    def entities(self, text: str) -> list[EntitySpan]:
        spans: list[EntitySpan] = []
        previous_end = 0
        first = True
        for _, start, end in token_spans(text):
            gap = text[previous_end:start]
            sentence_initial = first or any(ch in ".!?" for ch in gap)
            first = False
            previous_end = end
            token = text[start:end]
            if any(ch.isdigit() for ch in token):
                spans.append(EntitySpan(start, end, "NUM"))
            elif token[0].isupper() and not sentence_initial:
                spans.append(EntitySpan(start, end, "NAME"))
        return spans


def _post_json(session, url: str, payload: dict, timeout: float) -> dict:
    try:
        response = session.post(url, json=payload, timeout=timeout)
    except requests.RequestException as err:
        raise ProviderFailure(f"POST {url} failed: {err}") from err
    if response.status_code != 200:
        raise ProviderFailure(f"POST {url} returned {response.status_code}")
    try:
        return response.json()
    except ValueError as err:
        raise ProviderFailure(f"POST {url} returned invalid JSON") from err


def sidecar_base_url(base_url: str | None = None) -> str:
    url = base_url or os.environ.get("PACO_SIDECAR_URL", "")
    if not url:
        raise ProviderFailure(
            "no sidecar URL; pass base_url or set PACO_SIDECAR_URL"
        )
    return url.rstrip("/")


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for the sidecar's /embed and /score endpoints."""

    def __init__(self, base_url: str | None = None, timeout: float = 30.0):
        self.base_url = sidecar_base_url(base_url)
        self.timeout = timeout
        self._session = requests.Session()

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        data = _post_json(
            self._session,
            f"{self.base_url}/embed",
            {"texts": list(texts)},
            self.timeout,
        )
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderFailure("/embed returned a malformed vectors field")
        out = np.asarray(vectors, dtype=float)
        if out.ndim != 2 or not np.all(np.isfinite(out)):
            raise ProviderFailure("/embed vectors are not a finite matrix")
        return out

    def pair_score(self, candidate: str, reference: str) -> float:
        data = _post_json(
            self._session,
            f"{self.base_url}/score",
            {"candidate": candidate, "reference": reference},
            self.timeout,
        )
        score = data.get("f1")
        if not isinstance(score, (int, float)) or not np.isfinite(score):
            raise ProviderFailure("/score returned a malformed f1 field")
        return float(min(max(float(score), 0.0), 1.0))


class HttpNerProvider(NerProvider):
    """Client for the sidecar's /ner endpoint (character offsets)."""

    def __init__(self, base_url: str | None = None, timeout: float = 30.0):
        self.base_url = sidecar_base_url(base_url)
        self.timeout = timeout
        self._session = requests.Session()

    def entities(self, text: str) -> list[EntitySpan]:
        data = _post_json(
            self._session, f"{self.base_url}/ner", {"text": text}, self.timeout
        )
        raw = data.get("spans")
        if not isinstance(raw, list):
            raise ProviderFailure("/ner returned a malformed spans field")
        spans = []
        for item in raw:
            try:
                span = EntitySpan(int(item["start"]), int(item["end"]), str(item["label"]))
            except (KeyError, TypeError, ValueError) as err:
                raise ProviderFailure(f"/ner span malformed: {item!r}") from err
            if not (0 <= span.start <= span.end <= len(text)):
                raise ProviderFailure(f"/ner span out of bounds: {span}")
            spans.append(span)
        spans.sort(key=lambda s: s.start)
        for left, right in zip(spans, spans[1:]):
            if right.start < left.end:
                raise ProviderFailure(f"/ner spans overlap: {left} {right}")
        return spans


@dataclass
class MeasurementProviders:
    """Capability bundle consumed by ``measure_all``."""

    embedder: EmbeddingProvider
    ner: NerProvider

    @classmethod
    def fallback(cls) -> "MeasurementProviders":
        return cls(embedder=HashingEmbedder(), ner=HeuristicNer())

    @classmethod
    def http(cls, base_url: str | None = None) -> "MeasurementProviders":
        return cls(
            embedder=HttpEmbeddingProvider(base_url),
            ner=HttpNerProvider(base_url),
        )
