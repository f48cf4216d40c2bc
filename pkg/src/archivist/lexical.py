"""Inverted index with TF-IDF and BM25 scoring.

Scoring formulas (one place, oracle-tested):

  TF-IDF: document and query term weights are w = (1 + ln tf) * idf with
  idf = ln((1 + N) / (1 + df)); the score is the cosine between the two
  sparse weight vectors. Query terms absent from the corpus keep df = 0 and
  therefore still contribute to the query norm.

  BM25: idf = ln(1 + (N - df + 0.5) / (df + 0.5)) summed over query tokens
  (as a multiset) with the saturation term
  tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl)).

The index is immutable after build; rebuild and swap to update. Persistence
is a versioned JSONL file (header line, doc lengths line, one postings line
per term) documented in docs/data-format.md.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import AnalyzerConfig, analyze
from .errors import EmptyCorpusError, IndexFormatError, InvalidArgumentError, NotFoundError

INDEX_FORMAT = "archivist-lexical-index"
INDEX_VERSION = 1

DEFAULT_BM25_K1 = 1.2
DEFAULT_BM25_B = 0.75


@dataclass
class InvertedIndex:
    """Term -> {entry id: term frequency} postings plus per-document stats."""

    postings: dict[str, dict[int, int]]
    doc_count: int
    doc_lengths: dict[int, int]
    avg_doc_len: float
    config: AnalyzerConfig = field(default_factory=AnalyzerConfig)
    # Cosine norms of the (1 + ln tf) * idf document vectors, precomputed.
    _tfidf_norms: dict[int, float] = field(default_factory=dict, repr=False)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf_tfidf(self, term: str) -> float:
        return math.log((1 + self.doc_count) / (1 + self.df(term)))

    def idf_bm25(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def doc_ids(self) -> list[int]:
        return sorted(self.doc_lengths)

    def _compute_tfidf_norms(self) -> None:
        norms: dict[int, float] = {doc: 0.0 for doc in self.doc_lengths}
        for term, plist in self.postings.items():
            idf = self.idf_tfidf(term)
            for doc, tf in plist.items():
                w = (1.0 + math.log(tf)) * idf
                norms[doc] += w * w
        self._tfidf_norms = {doc: math.sqrt(v) for doc, v in norms.items()}

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            header = {
                "format": INDEX_FORMAT,
                "version": INDEX_VERSION,
                "doc_count": self.doc_count,
                "avg_doc_len": self.avg_doc_len,
                "analyzer": {
                    "lowercase": self.config.lowercase,
                    "stopwords": sorted(self.config.stopwords),
                    "stemmer": self.config.stemmer,
                    "token_pattern": self.config.token_pattern,
                },
            }
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            fh.write(json.dumps({str(k): v for k, v in sorted(self.doc_lengths.items())}) + "\n")
            for term in sorted(self.postings):
                plist = sorted(self.postings[term].items())
                fh.write(json.dumps({"t": term, "p": plist}, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            try:
                header = json.loads(fh.readline())
            except json.JSONDecodeError as exc:
                raise IndexFormatError(f"{path}: not an index file") from exc
            if header.get("format") != INDEX_FORMAT:
                raise IndexFormatError(f"{path}: unknown format {header.get('format')!r}")
            if header.get("version") != INDEX_VERSION:
                raise IndexFormatError(
                    f"{path}: version {header.get('version')} != supported {INDEX_VERSION}"
                )
            ana = header["analyzer"]
            config = AnalyzerConfig(
                lowercase=ana["lowercase"],
                stopwords=frozenset(ana["stopwords"]),
                stemmer=ana["stemmer"],
                token_pattern=ana["token_pattern"],
            )
            doc_lengths = {int(k): v for k, v in json.loads(fh.readline()).items()}
            postings: dict[str, dict[int, int]] = {}
            for line in fh:
                rec = json.loads(line)
                postings[rec["t"]] = {int(doc): tf for doc, tf in rec["p"]}
        index = cls(
            postings=postings,
            doc_count=header["doc_count"],
            doc_lengths=doc_lengths,
            avg_doc_len=header["avg_doc_len"],
            config=config,
        )
        index._compute_tfidf_norms()
        return index


def build_index(
    docs: Iterable[tuple[int, str]], config: AnalyzerConfig | None = None
) -> InvertedIndex:
    """Index (entry id, text) pairs; raises EmptyCorpusError on zero docs."""
    config = config or AnalyzerConfig()
    postings: dict[str, dict[int, int]] = {}
    doc_lengths: dict[int, int] = {}
    for doc_id, text in docs:
        tokens = analyze(text, config)
        doc_lengths[doc_id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, {})[doc_id] = tf
    if not doc_lengths:
        raise EmptyCorpusError("cannot build an index over an empty corpus")
    n = len(doc_lengths)
    index = InvertedIndex(
        postings=postings,
        doc_count=n,
        doc_lengths=doc_lengths,
        avg_doc_len=sum(doc_lengths.values()) / n,
        config=config,
    )
    index._compute_tfidf_norms()
    return index


def score_tfidf(query_tokens: Sequence[str], entry_id: int, index: InvertedIndex) -> float:
    """Cosine similarity between sparse tf-idf vectors of query and document."""
    if entry_id not in index.doc_lengths:
        raise NotFoundError(f"entry {entry_id} is not indexed")
    if not query_tokens:
        return 0.0
    q_norm_sq = 0.0
    dot = 0.0
    for term, qtf in Counter(query_tokens).items():
        idf = index.idf_tfidf(term)
        wq = (1.0 + math.log(qtf)) * idf
        q_norm_sq += wq * wq
        tf = index.postings.get(term, {}).get(entry_id)
        if tf:
            dot += wq * (1.0 + math.log(tf)) * idf
    d_norm = index._tfidf_norms.get(entry_id, 0.0)
    if q_norm_sq == 0.0 or d_norm == 0.0:
        return 0.0
    return dot / (math.sqrt(q_norm_sq) * d_norm)


def score_bm25(
    query_tokens: Sequence[str],
    entry_id: int,
    index: InvertedIndex,
    k1: float = DEFAULT_BM25_K1,
    b: float = DEFAULT_BM25_B,
) -> float:
    if entry_id not in index.doc_lengths:
        raise NotFoundError(f"entry {entry_id} is not indexed")
    dl = index.doc_lengths[entry_id]
    score = 0.0
    for term in query_tokens:
        tf = index.postings.get(term, {}).get(entry_id)
        if not tf:
            continue
        denom = tf + k1 * (1.0 - b + b * dl / index.avg_doc_len)
        score += index.idf_bm25(term) * tf * (k1 + 1.0) / denom
    return score


def search_lexical(
    query_tokens: Sequence[str],
    k: int,
    index: InvertedIndex,
    scorer: str = "tfidf",
    filter: set[int] | None = None,
    k1: float = DEFAULT_BM25_K1,
    b: float = DEFAULT_BM25_B,
) -> list[tuple[int, float]]:
    """Top-k entries by the chosen scorer, descending, ties by ascending id.

    Zero-score entries are dropped; when a filter set is given only its
    members are considered. Only documents sharing at least one query term
    can score above zero under either formula, so candidates come straight
    from the posting lists.
    """
    if k <= 0:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    if scorer not in ("tfidf", "bm25"):
        raise InvalidArgumentError(f"unknown scorer {scorer!r}")
    candidates: set[int] = set()
    for term in set(query_tokens):
        plist = index.postings.get(term)
        if plist:
            candidates.update(plist)
    if filter is not None:
        candidates &= filter
    scored: list[tuple[int, float]] = []
    for doc_id in candidates:
        if scorer == "tfidf":
            s = score_tfidf(query_tokens, doc_id, index)
        else:
            s = score_bm25(query_tokens, doc_id, index, k1=k1, b=b)
        if s > 0.0:
            scored.append((doc_id, s))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]
