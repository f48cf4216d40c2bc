"""Acceptance suite: one test per release criterion, strict tolerances.

Run with `pytest -s tests/test_acceptance.py` to see one PASS/FAIL line per
criterion. Every expected value here is either computed by an independent
oracle inside this file (or the shared test oracles) or forced by a closed
form; nothing is tuned to match the implementation.
"""

import json
import random
import socket
import time
from contextlib import contextmanager

import numpy as np
import pytest

from archivist.benchmark import generate_benchmark
from archivist.embeddings import Embedding, HashedEmbeddingProvider
from archivist.evaluation import default_config_grid, evaluate_search, krippendorff_alpha, render_table
from archivist.fusion import FusionParams, blend_arms, blend_fields
from archivist.kb import KnowledgeBase
from archivist.lexical import build_index, score_bm25, score_tfidf, search_lexical
from archivist.sqlbridge import SqlQuery
from archivist.sqlguard import validate_select_only
from archivist.vectors import KIND_ENTRY, VectorStore

from conftest import build_stack, hand_authors, hand_entries
from test_evaluation import oracle_alpha
from test_lexical import DOCS, RAW, exhaustive_topk, oracle_bm25, oracle_tfidf, tokenized
from test_sqlguard import SCHEMA, load_corpus
import e2e_fixture


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE FAIL - {name}", flush=True)
        raise
    print(f"\nACCEPTANCE PASS - {name}", flush=True)


def test_arm_blend_suite(bench_stack, bench_data):
    with criterion("Arm blend: 1000 random triples at 1e-12 + endpoint argsort on 50 queries (<5s)"):
        start = time.perf_counter()
        rng = random.Random(101)
        for _ in range(1000):
            s_sem, s_ft, alpha = rng.random(), rng.random(), rng.random()
            assert abs(blend_arms(s_sem, s_ft, alpha) - (alpha * s_sem + (1 - alpha) * s_ft)) <= 1e-12

        _, _, dataset = bench_data
        queries = [q.text for q in dataset.questions[:50]]
        assert len(queries) == 50
        for query in queries:
            top, union = bench_stack.searcher.hybrid_search(
                query, FusionParams(alpha=1.0, gamma=1.0), with_union=True
            )
            want = sorted(union, key=lambda c: (-c.s_sem_raw, c.entry_id))[:5]
            assert [c.entry_id for c in top] == [c.entry_id for c in want]

            top, union = bench_stack.searcher.hybrid_search(
                query, FusionParams(alpha=0.0, gamma=1.0), with_union=True
            )
            want = sorted(union, key=lambda c: (-c.s_ft_raw, c.entry_id))[:5]
            assert [c.entry_id for c in top] == [c.entry_id for c in want]
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_field_blend_suite():
    with criterion("Field blend: gamma=1 and empty-field-set reductions exact, 1000 random at 1e-12"):
        rng = random.Random(202)
        for _ in range(1000):
            s1 = rng.random()
            gamma = rng.random()
            fields = {
                f"authors.f{i}": rng.random() for i in range(rng.randint(0, 4))
            }
            got = blend_fields(s1, fields, gamma)
            if fields:
                want = gamma * s1 + (1 - gamma) * (sum(fields.values()) / len(fields))
            else:
                want = s1
            assert abs(got - want) <= 1e-12
            assert blend_fields(s1, fields, 1.0) == s1  # gamma endpoint, exact
            assert blend_fields(s1, {}, gamma) == s1  # empty-C rule, exact


def test_vector_search_oracle():
    with criterion("Vector search vs brute force: 100 queries x 1000 vectors, top-10 (<10s)"):
        start = time.perf_counter()
        rng = np.random.default_rng(42)
        dim = 64
        store = VectorStore()
        raw = {}
        for i in range(1000):
            v = rng.normal(size=dim)
            v /= np.linalg.norm(v)
            raw[i] = v
            store.add(KIND_ENTRY, i, None, Embedding(v, dim, "oracle-model"))

        for _ in range(100):
            q = rng.normal(size=dim)
            q /= np.linalg.norm(q)
            got = store.search_semantic(Embedding(q, dim, "oracle-model"), 10)

            # Independent reference scan: plain loops and explicit norms.
            scored = []
            for owner_id, vec in raw.items():
                num = float(np.dot(q, vec))
                den = float(np.linalg.norm(q)) * float(np.linalg.norm(vec))
                scored.append((owner_id, max(-1.0, min(1.0, num / den))))
            scored.sort(key=lambda p: (-p[1], p[0]))
            want = scored[:10]

            assert [g[0] for g in got] == [w[0] for w in want]
            for (_, gs), (_, ws) in zip(got, want):
                assert abs(gs - ws) <= 1e-9
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_lexical_oracle(bench_stack):
    with criterion("Lexical: symbolic oracle at 1e-9 + exhaustive top-k on 50 queries"):
        idx = build_index(((i, t) for i, t in DOCS.items()), RAW)
        docs = tokenized()
        for query in (["b", "c"], ["a"], ["b", "b", "c"], ["a", "b", "c", "d", "e"], ["e"]):
            for doc_id in docs:
                assert abs(
                    score_tfidf(query, doc_id, idx) - oracle_tfidf(query, docs, doc_id)
                ) <= 1e-9
                assert abs(
                    score_bm25(query, doc_id, idx) - oracle_bm25(query, docs, doc_id)
                ) <= 1e-9

        rng = random.Random(77)
        vocab = list(bench_stack.index.postings)
        for _ in range(50):
            query = rng.sample(vocab, rng.randint(1, 6))
            for scorer in ("tfidf", "bm25"):
                got = search_lexical(query, 5, bench_stack.index, scorer=scorer)
                assert got == exhaustive_topk(query, bench_stack.index, 5, scorer)


def test_sql_guard_gate():
    with criterion("SQL guard: 0 adversarial accepted, all valid accepted, store hash stable"):
        kb = KnowledgeBase()
        kb.ingest_records(hand_entries(), hand_authors())
        hash_before = kb.content_hash()

        adversarial = load_corpus("adversarial.sql")
        valid = load_corpus("valid.sql")
        assert len(adversarial) >= 50 and len(valid) >= 20

        accepted_bad = [s for s in adversarial if validate_select_only(s, SCHEMA).accepted]
        assert accepted_bad == []

        for sql in valid:
            verdict = validate_select_only(sql, SCHEMA)
            assert verdict.accepted, f"{sql!r}: {verdict.reason} {verdict.detail}"
            kb.execute_select(SqlQuery(sql, origin="user", verdict=verdict))

        assert kb.content_hash() == hash_before


def test_benchmark_gate(bench_stack, bench_data):
    with criterion("Benchmark: hybrid >= lexical-only, semantic-only >= 0.5 (<60s)"):
        start = time.perf_counter()
        _, _, dataset = bench_data
        assert len(dataset.questions) == 50
        assert bench_stack.kb.entry_count() == 125

        report = evaluate_search(dataset, bench_stack.searcher, default_config_grid())
        by_label = {r.label: r.mean_precision for r in report.rows}
        print()
        print(render_table(report))
        print(
            "reference points from the original full-corpus deployment"
            " (not asserted): tf-idf 0.264, best hybrid 0.572"
        )
        assert by_label["hybrid (a=0.9)"] >= by_label["lexical-only"]
        assert by_label["semantic-only"] >= 0.5
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"took {elapsed:.2f}s"


def test_krippendorff_gate():
    with criterion("Krippendorff: perfect agreement = 1.0 exactly, hand matrix vs oracle at 1e-9"):
        perfect = [[4, 4, 4], [1, 1, 1], [3, 3, 3], [5, 5, 5]]
        for metric in ("nominal", "ordinal", "interval"):
            assert krippendorff_alpha(perfect, metric) == 1.0

        hand = [[1, 2], [3, 3], [5, 4], [2, 2]]  # 4 items x 2 raters
        for metric in ("nominal", "ordinal", "interval"):
            got = krippendorff_alpha(hand, metric)
            want = oracle_alpha(hand, metric)
            assert abs(got - want) <= 1e-9


def test_e2e_determinism(monkeypatch):
    with criterion("E2E: 3 scripted turns reproduce the golden file byte-exactly, zero network"):
        def no_network(*args, **kwargs):
            raise AssertionError("network use during the offline e2e run")

        monkeypatch.setattr(socket.socket, "connect", no_network)
        monkeypatch.setattr(socket, "create_connection", no_network)

        got = e2e_fixture.turns_as_json(e2e_fixture.run_session()) + "\n"
        golden = e2e_fixture.GOLDEN_PATH.read_text(encoding="utf-8")
        assert got == golden

        turns = json.loads(golden)
        assert len(turns) == 3
        assert turns[1]["sql_filter"] == [1, 3, 5]  # the SQL-filter turn
        assert turns[2]["generated_query"] == turns[2]["user_text"]  # the fallback turn


def test_scale_target():
    with criterion("Scale: hybrid top-5 over a 60,240-entry corpus in < 1 s per query"):
        build_start = time.perf_counter()
        entries, authors, dataset = generate_benchmark(
            seed=11, topics=120, entries_per_topic=502, questions_per_topic=1
        )
        assert len(entries) == 60240
        stack = build_stack(entries, authors)
        print(f"\ncorpus + index build: {time.perf_counter() - build_start:.1f}s")

        params = FusionParams(alpha=0.9, gamma=1.0, k=5)
        queries = [q.text for q in dataset.questions[:5]]
        worst = 0.0
        for query in queries:
            q_start = time.perf_counter()
            got = stack.searcher.hybrid_search(query, params)
            q_elapsed = time.perf_counter() - q_start
            worst = max(worst, q_elapsed)
            assert len(got) == 5
        print(f"worst query latency over {len(queries)} queries: {worst * 1000:.0f} ms")
        assert worst < 1.0, f"query took {worst:.2f}s"
