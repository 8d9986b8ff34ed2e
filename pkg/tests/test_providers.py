from __future__ import annotations

import random

import numpy as np
import pytest

from paco.errors import ProviderFailure
from paco.providers import (
    HashingEmbedder,
    HeuristicNer,
    HttpEmbeddingProvider,
    HttpNerProvider,
    sidecar_base_url,
    token_f1,
)


def test_hashing_embedder_unit_norm():
    emb = HashingEmbedder()
    texts = ["hello world", "a a a", "", "2024 numbers", "ünïcode café"]
    vectors = emb.embed(texts)
    norms = np.linalg.norm(vectors, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-9)


def test_hashing_embedder_deterministic():
    emb = HashingEmbedder()
    first = emb.embed(["the launch plan", "budget"])
    second = emb.embed(["the launch plan", "budget"])
    assert np.array_equal(first, second)


def test_hashing_embedder_repetition_is_colinear():
    emb = HashingEmbedder()
    single, repeated = emb.embed(["launch", "launch launch launch"])
    assert np.allclose(single, repeated)


def test_token_f1_cases():
    assert token_f1("same words here", "same words here") == 1.0
    assert token_f1("aa bb", "cc dd") == 0.0
    assert token_f1("a b c", "a b d") == pytest.approx(2.0 / 3.0)


def test_heuristic_ner_caps_and_digits():
    text = "Paris is big. The Eiffel Tower is in Paris."
    spans = HeuristicNer().entities(text)
    found = [text[s.start : s.end] for s in spans]
    # sentence-initial "Paris" and "The" are skipped
    assert found == ["Eiffel", "Tower", "Paris"]

    spans = HeuristicNer().entities("launch in 2024 said Bob")
    found = [( "launch in 2024 said Bob"[s.start : s.end], s.label) for s in spans]
    assert found == [("2024", "NUM"), ("Bob", "NAME")]


def test_heuristic_ner_spans_valid_on_fuzz():
    rng = random.Random(13)
    pool = "Ab cD. 12!? Éé中'\n"
    ner = HeuristicNer()
    for _ in range(200):
        text = "".join(rng.choice(pool) for _ in range(rng.randrange(0, 80)))
        spans = ner.entities(text)
        for span in spans:
            assert 0 <= span.start < span.end <= len(text)
        for left, right in zip(spans, spans[1:]):
            assert left.end <= right.start


def test_http_embedding_provider(stub_server):
    stub_server.routes["/embed"] = lambda payload: (
        200,
        {"vectors": [[1.0, 0.0] for _ in payload["texts"]]},
    )
    stub_server.routes["/score"] = lambda payload: (200, {"f1": 0.83})
    provider = HttpEmbeddingProvider(stub_server.url)
    vectors = provider.embed(["a", "b"])
    assert vectors.shape == (2, 2)
    assert provider.pair_score("a", "b") == 0.83
    assert stub_server.requests[0] == ("/embed", {"texts": ["a", "b"]})
    assert stub_server.requests[1] == (
        "/score",
        {"candidate": "a", "reference": "b"},
    )


def test_http_embedding_provider_clamps_score(stub_server):
    stub_server.routes["/score"] = lambda payload: (200, {"f1": 1.7})
    provider = HttpEmbeddingProvider(stub_server.url)
    assert provider.pair_score("a", "b") == 1.0


def test_http_embedding_provider_failures(stub_server):
    provider = HttpEmbeddingProvider(stub_server.url)
    stub_server.routes["/embed"] = lambda payload: (500, {"error": "down"})
    with pytest.raises(ProviderFailure):
        provider.embed(["a"])
    stub_server.routes["/embed"] = lambda payload: (200, {"vectors": [[1.0]] * 3})
    with pytest.raises(ProviderFailure):
        provider.embed(["a"])
    stub_server.routes["/score"] = lambda payload: (200, {"f1": "high"})
    with pytest.raises(ProviderFailure):
        provider.pair_score("a", "b")


def test_http_ner_provider(stub_server):
    stub_server.routes["/ner"] = lambda payload: (
        200,
        {
            "spans": [
                {"start": 6, "end": 9, "label": "NAME"},
                {"start": 0, "end": 5, "label": "NAME"},
            ],
            "offsets": "char",
        },
    )
    spans = HttpNerProvider(stub_server.url).entities("Alice Bob")
    assert [(s.start, s.end) for s in spans] == [(0, 5), (6, 9)]


def test_http_ner_provider_rejects_bad_spans(stub_server):
    provider = HttpNerProvider(stub_server.url)
    stub_server.routes["/ner"] = lambda payload: (
        200,
        {"spans": [{"start": 0, "end": 99, "label": "X"}]},
    )
    with pytest.raises(ProviderFailure):
        provider.entities("short")
    stub_server.routes["/ner"] = lambda payload: (
        200,
        {
            "spans": [
                {"start": 0, "end": 4, "label": "X"},
                {"start": 2, "end": 5, "label": "X"},
            ]
        },
    )
    with pytest.raises(ProviderFailure):
        provider.entities("abcdef")


def test_sidecar_base_url_env(monkeypatch):
    monkeypatch.setenv("PACO_SIDECAR_URL", "http://example.test:9000/")
    assert sidecar_base_url() == "http://example.test:9000"
    monkeypatch.delenv("PACO_SIDECAR_URL")
    with pytest.raises(ProviderFailure):
        sidecar_base_url()
