"""Score fusion: candidate pooling, min-max normalization, linear blending.

The final relevance of a candidate is

    S = gamma * (alpha * S_sem + (1 - alpha) * S_ft)
        + (1 - gamma) * mean(S_c for c in fields C)

where S_sem / S_ft are the semantic and full-text scores min-max normalized
to [0, 1] within the per-query candidate union, and S_c are metadata-field
similarities. With gamma = 1 the field term vanishes; with an empty C the
field term is undefined and S reduces to the alpha-blend (no 0/0).

Pooling: each arm contributes its top-k; every union member then gets the
other arm's exact score computed on demand, so the alpha = 1 / alpha = 0
endpoints reproduce the single-arm rankings exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .analysis import analyze
from .embeddings import EmbeddingProvider, cosine
from .errors import InvalidArgumentError
from .kb import KnowledgeBase
from .lexical import (
    DEFAULT_BM25_B,
    DEFAULT_BM25_K1,
    InvertedIndex,
    score_bm25,
    score_tfidf,
    search_lexical,
)
from .vectors import VectorStore

DEFAULT_ALPHA = 0.9
DEFAULT_GAMMA = 1.0
DEFAULT_K = 5
DEFAULT_FIELDS = (("authors", "bio"),)


@dataclass(frozen=True)
class FusionParams:
    """Weights and depths for hybrid ranking.

    alpha: semantic weight in the two-arm blend.
    gamma: weight of the blend versus the metadata-field average.
    k:     per-arm retrieval depth (and final result length).
    fields: (table, column) pairs whose embeddings feed the field term.
    """

    alpha: float = DEFAULT_ALPHA
    gamma: float = DEFAULT_GAMMA
    k: int = DEFAULT_K
    fields: tuple[tuple[str, str], ...] = DEFAULT_FIELDS

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidArgumentError(f"alpha must be in [0, 1], got {self.alpha}")
        if not (0.0 <= self.gamma <= 1.0):
            raise InvalidArgumentError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "fields", tuple(tuple(f) for f in self.fields))


@dataclass
class ScoredCandidate:
    """One retrieval result with every component of its final score.

    s_final is recomputable from the stored pieces:
    blend_fields(blend_arms(s_sem, s_ft, alpha), field_scores, gamma).
    """

    entry_id: int
    s_sem_raw: float
    s_ft_raw: float
    s_sem: float
    s_ft: float
    field_scores: dict[str, float]
    s_final: float

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "s_sem_raw": self.s_sem_raw,
            "s_ft_raw": self.s_ft_raw,
            "s_sem": self.s_sem,
            "s_ft": self.s_ft,
            "field_scores": dict(sorted(self.field_scores.items())),
            "s_final": self.s_final,
        }


def normalize_minmax(raw: Sequence[float]) -> list[float]:
    """(x - min) / (max - min); all-equal inputs map to all 1.0 so equal
    candidates stay tied instead of being zeroed out."""
    if len(raw) == 0:
        raise InvalidArgumentError("cannot normalize an empty score list")
    if any(not math.isfinite(x) for x in raw):
        raise InvalidArgumentError("scores must be finite")
    lo = min(raw)
    hi = max(raw)
    if hi == lo:
        return [1.0] * len(raw)
    span = hi - lo
    return [(x - lo) / span for x in raw]


def blend_arms(s_sem: float, s_ft: float, alpha: float) -> float:
    """alpha * s_sem + (1 - alpha) * s_ft over [0, 1] inputs."""
    for name, v in (("s_sem", s_sem), ("s_ft", s_ft), ("alpha", alpha)):
        if not (0.0 <= v <= 1.0):
            raise InvalidArgumentError(f"{name} must be in [0, 1], got {v}")
    return alpha * s_sem + (1.0 - alpha) * s_ft


def blend_fields(arm_score: float, field_scores: Mapping[str, float], gamma: float) -> float:
    """gamma * arm_score + (1 - gamma) * mean(field_scores).

    An empty field map drops the field term entirely (S = arm_score) rather than
    dividing by zero.
    """
    if not (0.0 <= arm_score <= 1.0):
        raise InvalidArgumentError(f"arm_score must be in [0, 1], got {arm_score}")
    if not (0.0 <= gamma <= 1.0):
        raise InvalidArgumentError(f"gamma must be in [0, 1], got {gamma}")
    for name, v in field_scores.items():
        if not (0.0 <= v <= 1.0):
            raise InvalidArgumentError(f"field score {name} must be in [0, 1], got {v}")
    if not field_scores:
        return arm_score
    field_mean = sum(field_scores.values()) / len(field_scores)
    return gamma * arm_score + (1.0 - gamma) * field_mean


class HybridSearcher:
    """Binds both retrieval arms plus the stores they score against."""

    def __init__(
        self,
        kb: KnowledgeBase,
        index: InvertedIndex | None,
        vstore: VectorStore,
        provider: EmbeddingProvider,
        scorer: str = "tfidf",
        bm25_k1: float = DEFAULT_BM25_K1,
        bm25_b: float = DEFAULT_BM25_B,
    ):
        self.kb = kb
        self.index = index
        self.vstore = vstore
        self.provider = provider
        self.scorer = scorer
        self.bm25_k1 = bm25_k1
        self.bm25_b = bm25_b

    def _lexical_raw(self, query_tokens: Sequence[str], entry_id: int, scorer: str) -> float:
        assert self.index is not None
        if scorer == "bm25":
            return score_bm25(query_tokens, entry_id, self.index, k1=self.bm25_k1, b=self.bm25_b)
        return score_tfidf(query_tokens, entry_id, self.index)

    def search_lexical_only(
        self, query: str, k: int, scorer: str | None = None, filter: set[int] | None = None
    ) -> list[tuple[int, float]]:
        """The full-text arm alone (no pooling with the semantic arm)."""
        if self.index is None or self.index.doc_count == 0:
            return []
        tokens = analyze(query, self.index.config)
        return search_lexical(
            tokens,
            k,
            self.index,
            scorer=scorer or self.scorer,
            filter=filter,
            k1=self.bm25_k1,
            b=self.bm25_b,
        )

    def search_semantic_only(
        self, query: str, k: int, filter: set[int] | None = None
    ) -> list[tuple[int, float]]:
        """The semantic arm alone (exact scan)."""
        if len(self.vstore) == 0:
            return []
        return self.vstore.search_semantic(self.provider.embed(query), k, filter=filter)

    def hybrid_search(
        self,
        query: str,
        params: FusionParams | None = None,
        filter: set[int] | None = None,
        scorer: str | None = None,
        with_union: bool = False,
    ) -> list[ScoredCandidate] | tuple[list[ScoredCandidate], list[ScoredCandidate]]:
        """Fused top-k for a text query.

        1. top-k from each arm (respecting ``filter``);
        2. candidate union;
        3. exact missing-arm raw score for every union member;
        4. min-max normalization of each arm within the union;
        5. the two-stage blend above, with field scores for the query;
        6. sort by final score descending, ties by ascending entry id; cut to k.

        ``with_union`` additionally returns every union member scored, for
        audit/recomputation; the first element is always the top-k list.
        An empty corpus yields an empty result, not an error.
        """
        if not query.strip():
            raise InvalidArgumentError("query must be non-empty")
        params = params or FusionParams()
        scorer = scorer or self.scorer
        if scorer not in ("tfidf", "bm25"):
            raise InvalidArgumentError(f"unknown scorer {scorer!r}")
        if self.index is None or self.index.doc_count == 0 or len(self.vstore) == 0:
            return ([], []) if with_union else []

        query_tokens = analyze(query, self.index.config)
        query_emb = self.provider.embed(query)

        lex_top = search_lexical(
            query_tokens,
            params.k,
            self.index,
            scorer=scorer,
            filter=filter,
            k1=self.bm25_k1,
            b=self.bm25_b,
        )
        sem_top = self.vstore.search_semantic(query_emb, params.k, filter=filter)

        union_ids = sorted({eid for eid, _ in lex_top} | {eid for eid, _ in sem_top})
        if not union_ids:
            return ([], []) if with_union else []

        sem_raw = {eid: s for eid, s in sem_top}
        ft_raw = {eid: s for eid, s in lex_top}
        for eid in union_ids:
            if eid not in sem_raw:
                sem_raw[eid] = cosine(
                    query_emb.vector, self.vstore.entry_vector(eid, query_emb.model_id)
                )
            if eid not in ft_raw:
                ft_raw[eid] = self._lexical_raw(query_tokens, eid, scorer)

        sem_norm = normalize_minmax([sem_raw[eid] for eid in union_ids])
        ft_norm = normalize_minmax([ft_raw[eid] for eid in union_ids])

        candidates: list[ScoredCandidate] = []
        for i, eid in enumerate(union_ids):
            entry = self.kb.get_entry(eid)
            fscores = self.vstore.field_scores(query_emb, entry, params.fields)
            s1 = blend_arms(sem_norm[i], ft_norm[i], params.alpha)
            s2 = blend_fields(s1, fscores, params.gamma)
            candidates.append(
                ScoredCandidate(
                    entry_id=eid,
                    s_sem_raw=sem_raw[eid],
                    s_ft_raw=ft_raw[eid],
                    s_sem=sem_norm[i],
                    s_ft=ft_norm[i],
                    field_scores=fscores,
                    s_final=s2,
                )
            )
        candidates.sort(key=lambda c: (-c.s_final, c.entry_id))
        top = candidates[: params.k]
        return (top, candidates) if with_union else top
