"""Embedding providers and cosine similarity.

Two providers behind one interface:

  * HashedEmbeddingProvider — deterministic and offline. Tokens are hashed
    with a keyed blake2b into one of ``dim`` signed slots (feature hashing
    with +-1 signs), summed, then L2-normalized. Lexical overlap between two
    texts translates monotonically into cosine similarity, which is exactly
    the property the synthetic benchmark relies on.
  * RemoteEmbeddingProvider — HTTP client for an embedding endpoint
    (request: {"model": ..., "texts": [...]}; response: {"embeddings":
    [[...], ...]}). Vectors are re-normalized on receipt so the unit-norm
    invariant holds regardless of the server.

All providers emit unit-norm vectors (||v|| = 1 within 1e-6).
"""

from __future__ import annotations

import functools
import hashlib
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .errors import InvalidArgumentError, ProviderError

NORM_TOLERANCE = 1e-6

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True, eq=False)
class Embedding:
    vector: np.ndarray = field(repr=False)
    dim: int
    model_id: str

    def __post_init__(self) -> None:
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != self.dim:
            raise ValueError(f"vector length {v.shape} != dim {self.dim}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vector has non-finite components")
        object.__setattr__(self, "vector", v)


@runtime_checkable
class EmbeddingProvider(Protocol):
    model_id: str
    dim: int

    def embed(self, text: str) -> Embedding: ...

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]: ...


@functools.lru_cache(maxsize=1 << 18)
def _hash_slot(seed: int, dim: int, token: str) -> tuple[int, float]:
    """Stable (slot, sign) for a token; keyed so different seeds decorrelate."""
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    slot = int.from_bytes(digest[:4], "little") % dim
    sign = 1.0 if digest[4] & 1 else -1.0
    return slot, sign


class HashedEmbeddingProvider:
    """Deterministic local provider via signed feature hashing."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.model_id = f"hash-{dim}-seed{seed}"

    def embed(self, text: str) -> Embedding:
        if not text.strip():
            raise InvalidArgumentError("cannot embed empty text")
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            # Symbol-only input: hash the whole stripped string instead.
            tokens = [text.strip()]
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            slot, sign = _hash_slot(self.seed, self.dim, token)
            vec[slot] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Tokens cancelled exactly; pick a deterministic unit direction.
            slot, sign = _hash_slot(self.seed, self.dim, " ".join(tokens))
            vec[slot] = sign
            norm = 1.0
        return Embedding(vec / norm, self.dim, self.model_id)

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        return [self.embed(t) for t in texts]


class RemoteEmbeddingProvider:
    """Client for an HTTP embedding endpoint."""

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        dim: int,
        api_key: str | None = None,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.dim = dim
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def embed(self, text: str) -> Embedding:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        for t in texts:
            if not t.strip():
                raise InvalidArgumentError("cannot embed empty text")
        try:
            resp = self._client.post(
                self.endpoint, json={"model": self.model_id, "texts": list(texts)}
            )
        except httpx.TimeoutException as exc:
            raise ProviderError(f"embedding request timed out: {exc}", retryable=True) from exc
        except httpx.HTTPError as exc:
            raise ProviderError(f"embedding request failed: {exc}", retryable=True) from exc
        if resp.status_code in (401, 403):
            raise ProviderError(f"embedding auth failed ({resp.status_code})", retryable=False)
        if resp.status_code != 200:
            raise ProviderError(
                f"embedding endpoint returned {resp.status_code}",
                retryable=resp.status_code >= 500,
            )
        vectors = resp.json().get("embeddings", [])
        if len(vectors) != len(texts):
            raise ProviderError(
                f"endpoint returned {len(vectors)} vectors for {len(texts)} texts",
                retryable=False,
            )
        out = []
        for raw in vectors:
            v = np.asarray(raw, dtype=np.float64)
            if v.shape != (self.dim,):
                raise ProviderError(f"vector of dim {v.shape} != {self.dim}", retryable=False)
            norm = float(np.linalg.norm(v))
            if norm == 0.0 or not np.all(np.isfinite(v)):
                raise ProviderError("endpoint returned a degenerate vector", retryable=False)
            out.append(Embedding(v / norm, self.dim, self.model_id))
        return out


def cosine(u, v) -> float:
    """u.v / (||u|| ||v||), clamped to [-1, 1] against rounding."""
    a = u.vector if isinstance(u, Embedding) else np.asarray(u, dtype=np.float64)
    b = v.vector if isinstance(v, Embedding) else np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InvalidArgumentError("cosine undefined for zero vectors")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))
