"""Vector store: entry embeddings plus embeddings of filterable metadata fields.

One record per (owner kind, owner id, field name, model id); re-indexing
upserts. Entry vectors for each model are packed into a contiguous matrix so
semantic search is a single exact matrix-vector scan — no approximation.

Persistence uses numpy's .npz container with a JSON metadata blob; the store
is rebuildable from the knowledge base at any time.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embeddings import Embedding, EmbeddingProvider, cosine
from .errors import (
    IndexFormatError,
    InvalidArgumentError,
    NotFoundError,
    PartialIndexError,
    ProviderError,
)
from .kb import Author, Entry

STORE_FORMAT = "archivist-vector-store"
STORE_VERSION = 1

KIND_ENTRY = "entry"
KIND_FIELD = "field"


class VectorStore:
    """In-memory vector records with exact top-k scan over entry embeddings."""

    def __init__(self) -> None:
        # (kind, owner_id, field_name or "", model_id) -> vector
        self._records: dict[tuple[str, int, str, str], np.ndarray] = {}
        self._dims: dict[str, int] = {}
        self._lock = threading.RLock()
        # Packed matrix cache per model, rebuilt lazily after writes.
        self._matrix_cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self._records)

    # -- writes --------------------------------------------------------------

    def add(self, kind: str, owner_id: int, field_name: str | None, emb: Embedding) -> None:
        if kind not in (KIND_ENTRY, KIND_FIELD):
            raise InvalidArgumentError(f"unknown owner kind {kind!r}")
        with self._lock:
            known_dim = self._dims.setdefault(emb.model_id, emb.dim)
            if known_dim != emb.dim:
                raise InvalidArgumentError(
                    f"model {emb.model_id} has dim {known_dim}, got {emb.dim}"
                )
            self._records[(kind, owner_id, field_name or "", emb.model_id)] = emb.vector
            self._matrix_cache.pop(emb.model_id, None)

    def index_entries(self, provider: EmbeddingProvider, entries: Iterable[Entry]) -> int:
        """Embed and store every entry text; returns stored count.

        On provider failure raises PartialIndexError carrying how many records
        made it in; rerunning resumes via upsert.
        """
        stored = 0
        for entry in entries:
            try:
                emb = provider.embed(entry.text)
            except ProviderError as exc:
                raise PartialIndexError(f"entry indexing stopped: {exc}", completed=stored) from exc
            self.add(KIND_ENTRY, entry.id, None, emb)
            stored += 1
        return stored

    def index_fields(
        self,
        provider: EmbeddingProvider,
        authors: Iterable[Author],
        fields: Sequence[tuple[str, str]] = (("authors", "bio"),),
    ) -> tuple[int, int]:
        """Embed the configured metadata fields; returns (stored, skipped).

        Empty field values are skipped and counted. Only author columns are
        filterable in this schema.
        """
        stored = 0
        skipped = 0
        for author in authors:
            for table, column in fields:
                if table != "authors":
                    raise InvalidArgumentError(f"no indexable fields on table {table!r}")
                value = getattr(author, column, None)
                if value is None:
                    raise InvalidArgumentError(f"authors has no column {column!r}")
                text = str(value).strip()
                if not text:
                    skipped += 1
                    continue
                try:
                    emb = provider.embed(text)
                except ProviderError as exc:
                    raise PartialIndexError(
                        f"field indexing stopped: {exc}", completed=stored
                    ) from exc
                self.add(KIND_FIELD, author.id, f"{table}.{column}", emb)
                stored += 1
        return stored, skipped

    # -- reads ---------------------------------------------------------------

    def entry_matrix(self, model_id: str) -> tuple[np.ndarray, np.ndarray]:
        """(ids, matrix) for all entry records of one model, ids ascending."""
        with self._lock:
            cached = self._matrix_cache.get(model_id)
            if cached is not None:
                return cached
            items = sorted(
                (owner, vec)
                for (kind, owner, fname, model), vec in self._records.items()
                if kind == KIND_ENTRY and model == model_id
            )
            ids = np.array([owner for owner, _ in items], dtype=np.int64)
            matrix = (
                np.stack([vec for _, vec in items])
                if items
                else np.zeros((0, self._dims.get(model_id, 0)))
            )
            self._matrix_cache[model_id] = (ids, matrix)
            return ids, matrix

    def entry_vector(self, entry_id: int, model_id: str) -> np.ndarray:
        vec = self._records.get((KIND_ENTRY, entry_id, "", model_id))
        if vec is None:
            raise NotFoundError(f"entry {entry_id} has no embedding for model {model_id}")
        return vec

    def search_semantic(
        self,
        query_embedding: Embedding,
        k: int,
        filter: set[int] | None = None,
    ) -> list[tuple[int, float]]:
        """Exact top-k by cosine, descending, ties by ascending entry id."""
        if k <= 0:
            raise InvalidArgumentError(f"k must be positive, got {k}")
        ids, matrix = self.entry_matrix(query_embedding.model_id)
        if matrix.shape[0] == 0:
            return []
        if matrix.shape[1] != query_embedding.dim:
            raise InvalidArgumentError(
                f"query dim {query_embedding.dim} != stored dim {matrix.shape[1]}"
            )
        if filter is not None:
            mask = np.isin(ids, np.fromiter(filter, dtype=np.int64, count=len(filter)))
            ids = ids[mask]
            matrix = matrix[mask]
            if ids.size == 0:
                return []
        # Stored vectors and the query are unit norm, so the dot IS the cosine.
        sims = np.clip(matrix @ query_embedding.vector, -1.0, 1.0)
        order = np.lexsort((ids, -sims))[:k]
        return [(int(ids[i]), float(sims[i])) for i in order]

    def field_scores(
        self,
        query_embedding: Embedding,
        entry: Entry,
        fields: Sequence[tuple[str, str]],
    ) -> dict[str, float]:
        """Per-field similarity S_c = (1 + cos) / 2 in [0, 1].

        Fields without a stored record (empty value at index time, or never
        indexed) are omitted from the map.
        """
        out: dict[str, float] = {}
        for table, column in fields:
            key = f"{table}.{column}"
            vec = self._records.get(
                (KIND_FIELD, entry.author_id, key, query_embedding.model_id)
            )
            if vec is None:
                continue
            out[key] = (1.0 + cosine(query_embedding.vector, vec)) / 2.0
        return out

    # -- persistence ----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with self._lock:
            keys = sorted(self._records)
            meta = {
                "format": STORE_FORMAT,
                "version": STORE_VERSION,
                "dims": self._dims,
                "keys": [list(k) for k in keys],
            }
            arrays = {f"vec{i}": self._records[k] for i, k in enumerate(keys)}
            np.savez_compressed(path, meta=json.dumps(meta), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        with np.load(path, allow_pickle=False) as data:
            if "meta" not in data:
                raise IndexFormatError(f"{path}: not a vector store file")
            meta = json.loads(str(data["meta"]))
            if meta.get("format") != STORE_FORMAT:
                raise IndexFormatError(f"{path}: unknown format {meta.get('format')!r}")
            if meta.get("version") != STORE_VERSION:
                raise IndexFormatError(
                    f"{path}: version {meta.get('version')} != supported {STORE_VERSION}"
                )
            store = cls()
            store._dims = dict(meta["dims"])
            for i, key in enumerate(meta["keys"]):
                kind, owner, fname, model = key
                store._records[(kind, int(owner), fname, model)] = data[f"vec{i}"]
        return store
