"""Embedding providers and cosine similarity."""

import json
import math
import random

import httpx
import numpy as np
import pytest

from archivist.embeddings import (
    Embedding,
    HashedEmbeddingProvider,
    RemoteEmbeddingProvider,
    cosine,
)
from archivist.errors import InvalidArgumentError, ProviderError


class TestHashedProvider:
    def test_deterministic(self):
        p = HashedEmbeddingProvider()
        a = p.embed("the storm rose over the sea")
        b = p.embed("the storm rose over the sea")
        assert np.array_equal(a.vector, b.vector)

    def test_unit_norm(self):
        p = HashedEmbeddingProvider()
        rng = random.Random(3)
        words = ["w%d" % i for i in range(200)]
        for _ in range(100):
            text = " ".join(rng.sample(words, rng.randint(1, 12)))
            emb = p.embed(text)
            assert abs(np.linalg.norm(emb.vector) - 1.0) <= 1e-6

    def test_empty_text_rejected(self):
        with pytest.raises(InvalidArgumentError):
            HashedEmbeddingProvider().embed("   ")

    def test_symbol_only_text_still_unit(self):
        emb = HashedEmbeddingProvider().embed("!!! ??? !!!")
        assert abs(np.linalg.norm(emb.vector) - 1.0) <= 1e-6

    def test_overlap_monotonicity_statistical(self):
        # Texts sharing 3 of 4 tokens must look closer than disjoint ones.
        p = HashedEmbeddingProvider()
        rng = random.Random(42)
        for trial in range(200):
            base = [f"t{trial}w{i}" for i in range(4)]
            share3 = base[:3] + [f"t{trial}x"]
            share0 = [f"t{trial}y{i}" for i in range(4)]
            ref = p.embed(" ".join(base))
            close = cosine(ref, p.embed(" ".join(share3)))
            far = cosine(ref, p.embed(" ".join(share0)))
            assert close > far

    def test_different_seeds_decorrelate(self):
        a = HashedEmbeddingProvider(seed=0).embed("storm sea pier")
        b = HashedEmbeddingProvider(seed=1).embed("storm sea pier")
        assert not np.array_equal(a.vector, b.vector)

    def test_batch_matches_single(self):
        p = HashedEmbeddingProvider()
        batch = p.embed_batch(["one two", "three four"])
        assert np.array_equal(batch[0].vector, p.embed("one two").vector)
        assert np.array_equal(batch[1].vector, p.embed("three four").vector)


class TestEmbeddingType:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Embedding(np.zeros(3), 4, "m")

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Embedding(np.array([1.0, float("nan")]), 2, "m")


class TestCosine:
    def test_self_similarity(self):
        v = HashedEmbeddingProvider().embed("alpha beta gamma")
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_closed_form(self):
        u = np.array([1.0, 0.0])
        v = np.array([1.0, 1.0]) / math.sqrt(2)
        assert cosine(u, v) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            cosine(np.ones(3), np.ones(4))

    def test_zero_vector(self):
        with pytest.raises(InvalidArgumentError):
            cosine(np.zeros(3), np.ones(3))

    def test_clamped_to_range(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            u = rng.normal(size=16)
            v = rng.normal(size=16)
            assert -1.0 <= cosine(u, v) <= 1.0


def mock_remote(handler) -> RemoteEmbeddingProvider:
    return RemoteEmbeddingProvider(
        "http://embed.test/v1/embed",
        model_id="enc-1",
        dim=4,
        transport=httpx.MockTransport(handler),
    )


class TestRemoteProvider:
    def test_success_normalizes(self):
        def handler(request):
            payload = json.loads(request.content)
            assert payload["model"] == "enc-1"
            return httpx.Response(200, json={"embeddings": [[2.0, 0.0, 0.0, 0.0]]})

        emb = mock_remote(handler).embed("hello")
        assert emb.dim == 4
        assert np.allclose(emb.vector, [1.0, 0.0, 0.0, 0.0])

    def test_server_error_is_retryable(self):
        def handler(request):
            return httpx.Response(503)

        with pytest.raises(ProviderError) as exc:
            mock_remote(handler).embed("hello")
        assert exc.value.retryable

    def test_auth_error_not_retryable(self):
        def handler(request):
            return httpx.Response(401)

        with pytest.raises(ProviderError) as exc:
            mock_remote(handler).embed("hello")
        assert not exc.value.retryable

    def test_count_mismatch_rejected(self):
        def handler(request):
            return httpx.Response(200, json={"embeddings": []})

        with pytest.raises(ProviderError):
            mock_remote(handler).embed("hello")

    def test_timeout_maps_to_provider_error(self):
        def handler(request):
            raise httpx.ConnectTimeout("boom")

        with pytest.raises(ProviderError) as exc:
            mock_remote(handler).embed("hello")
        assert exc.value.retryable

    def test_empty_text_rejected_before_request(self):
        def handler(request):  # pragma: no cover - must not be reached
            raise AssertionError("request should not be sent")

        with pytest.raises(InvalidArgumentError):
            mock_remote(handler).embed("")
