"""Retrieval and annotation-agreement metrics plus the evaluation runner.

precision_at_k is the fraction of the first k retrieved ids that are
relevant. krippendorff_alpha follows the coincidence-matrix formulation
(alpha = 1 - D_observed / D_expected) with nominal, ordinal and interval
distance metrics; items carrying fewer than two scores are excluded.
evaluate_search sweeps fusion configurations over a judged question set and
reports mean precision per configuration.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .benchmark import EvalDataset
from .errors import DatasetMismatchError, InvalidArgumentError, UndefinedResultError
from .fusion import FusionParams, HybridSearcher

METRICS = ("nominal", "ordinal", "interval")


def precision_at_k(retrieved: Sequence[int], relevant: set[int] | frozenset[int], k: int) -> float:
    """|top-k(retrieved) ∩ relevant| / k."""
    if k <= 0:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    top = list(retrieved)[:k]
    return sum(1 for r in top if r in relevant) / k


@dataclass(frozen=True)
class AnnotationMatrix:
    """Items x raters grid of optional ordinal scores in 1..5."""

    scores: tuple[tuple[Optional[float], ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(r) for r in self.scores)
        object.__setattr__(self, "scores", rows)
        if not rows or len(rows[0]) < 2:
            raise ValueError("need at least 2 raters")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged rater columns")
        for row in rows:
            for v in row:
                if v is not None and not (1 <= v <= 5):
                    raise ValueError(f"score {v} outside 1..5")
        if not any(sum(v is not None for v in row) >= 2 for row in rows):
            raise ValueError("no item has two or more scores")


def krippendorff_alpha(matrix, metric: str = "interval") -> float:
    """Chance-corrected agreement over an items x raters grid (None = missing).

    Accepts an AnnotationMatrix or a plain nested sequence. Raises
    UndefinedResultError when fewer than two pairable values exist.
    """
    if metric not in METRICS:
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    rows = matrix.scores if isinstance(matrix, AnnotationMatrix) else matrix
    units = []
    for row in rows:
        vals = [float(v) for v in row if v is not None]
        if len(vals) >= 2:
            units.append(vals)
    n = sum(len(u) for u in units)
    if n < 2:
        raise UndefinedResultError("fewer than 2 pairable values")

    domain = sorted({v for u in units for v in u})
    index = {v: i for i, v in enumerate(domain)}
    m = len(domain)

    coincidence = np.zeros((m, m))
    for unit in units:
        size = len(unit)
        counts = Counter(unit)
        for c, nc in counts.items():
            for k2, nk in counts.items():
                pairs = nc * nk - (nc if c == k2 else 0)
                coincidence[index[c], index[k2]] += pairs / (size - 1)
    marginals = coincidence.sum(axis=1)

    delta = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            if metric == "nominal":
                delta[i, j] = 1.0
            elif metric == "interval":
                delta[i, j] = (domain[i] - domain[j]) ** 2
            else:  # ordinal: squared sum of in-between marginals minus endpoints' halves
                lo, hi = min(i, j), max(i, j)
                delta[i, j] = (
                    marginals[lo : hi + 1].sum() - (marginals[lo] + marginals[hi]) / 2.0
                ) ** 2

    d_observed = float((coincidence * delta).sum()) / n
    d_expected = float((np.outer(marginals, marginals) * delta).sum()) / (n * (n - 1))
    if d_expected == 0.0:
        return 1.0
    return 1.0 - d_observed / d_expected


@dataclass(frozen=True)
class EvalConfig:
    """One grid cell: a retrieval mode plus its parameters.

    mode "lexical" and "semantic" run one arm alone, matching a per-method
    evaluation protocol; "hybrid" runs the fused pipeline with ``params``.
    """

    label: str
    params: FusionParams
    scorer: str = "tfidf"
    mode: str = "hybrid"  # "lexical" | "semantic" | "hybrid"

    def __post_init__(self) -> None:
        if self.mode not in ("lexical", "semantic", "hybrid"):
            raise InvalidArgumentError(f"unknown eval mode {self.mode!r}")


@dataclass
class EvalRow:
    label: str
    mean_precision: float
    per_question: dict[int, float]


@dataclass
class EvalReport:
    k: int
    rows: list[EvalRow]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "rows": [
                {
                    "label": r.label,
                    "mean_precision": r.mean_precision,
                    "per_question": {str(q): p for q, p in sorted(r.per_question.items())},
                }
                for r in self.rows
            ],
        }


def default_config_grid(k: int = 5, fields=(("authors", "bio"),)) -> list[EvalConfig]:
    return [
        EvalConfig(
            "lexical-only", FusionParams(alpha=0.0, gamma=1.0, k=k, fields=fields), mode="lexical"
        ),
        EvalConfig(
            "semantic-only", FusionParams(alpha=1.0, gamma=1.0, k=k, fields=fields), mode="semantic"
        ),
        EvalConfig("hybrid (a=0.9)", FusionParams(alpha=0.9, gamma=1.0, k=k, fields=fields)),
    ]


def evaluate_search(
    dataset: EvalDataset,
    searcher: HybridSearcher,
    configs: Sequence[EvalConfig],
    k: int = 5,
) -> EvalReport:
    """Mean precision@k per configuration over all dataset questions.

    Verifies every judged entry id exists in the corpus before running any
    query; deterministic given corpus, dataset and configs.
    """
    known = {e.id for e in searcher.kb.iter_entries()}
    for q in dataset.questions:
        missing = q.relevant_ids - known
        if missing:
            raise DatasetMismatchError(
                f"question {q.id} references entries missing from the corpus: {sorted(missing)}"
            )
    rows: list[EvalRow] = []
    for config in configs:
        per_question: dict[int, float] = {}
        for q in dataset.questions:
            if config.mode == "lexical":
                retrieved = [
                    eid for eid, _ in searcher.search_lexical_only(q.text, k, config.scorer)
                ]
            elif config.mode == "semantic":
                retrieved = [eid for eid, _ in searcher.search_semantic_only(q.text, k)]
            else:
                candidates = searcher.hybrid_search(q.text, config.params, scorer=config.scorer)
                retrieved = [c.entry_id for c in candidates]
            per_question[q.id] = precision_at_k(retrieved, q.relevant_ids, k)
        mean = sum(per_question.values()) / len(per_question) if per_question else 0.0
        rows.append(EvalRow(config.label, mean, per_question))
    return EvalReport(k=k, rows=rows)


def render_table(report: EvalReport) -> str:
    """Aligned two-column text table of the evaluation grid."""
    header = ("Configuration", f"Precision@{report.k}")
    width = max(len(header[0]), *(len(r.label) for r in report.rows)) if report.rows else len(header[0])
    lines = [
        f"{header[0]:<{width}}  {header[1]}",
        f"{'-' * width}  {'-' * len(header[1])}",
    ]
    for r in report.rows:
        lines.append(f"{r.label:<{width}}  {r.mean_precision:.3f}")
    return "\n".join(lines)
