"""Shared fixtures: a hand corpus, the seeded benchmark stack, and helpers."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import pytest

from archivist.benchmark import EvalDataset, generate_benchmark
from archivist.embeddings import HashedEmbeddingProvider
from archivist.fusion import HybridSearcher
from archivist.kb import Author, Entry, KnowledgeBase
from archivist.lexical import InvertedIndex, build_index
from archivist.vectors import VectorStore

BENCH_SEED = 7


def hand_authors() -> list[Author]:
    return [
        Author(1, "Anna Petrova", date(1871, 3, 2), date(1940, 5, 1),
               "naturalist, sea voyages and coastal weather"),
        Author(2, "Boris Ivanov", date(1880, 7, 15), None,
               "infantry soldier writing from the front"),
        Author(3, "Clara Weiss", None, date(1935, 1, 20),
               "schoolteacher in a small river town"),
    ]


def hand_entries() -> list[Entry]:
    return [
        Entry(1, 2, date(1904, 8, 12),
              "We marched all day on half bread rations and slept in the mud"
              " near the supply depot."),
        Entry(2, 2, date(1905, 3, 2),
              "The soldiers traded tinned meat for tobacco; rations were thin"
              " before the thaw.", "https://example.org/scans/2"),
        Entry(3, 1, date(1903, 11, 19),
              "A great storm rose over the sea and the waves broke across the"
              " pier for two days."),
        Entry(4, 1, date(1906, 6, 30),
              "Calm water at dawn; we counted gulls and recorded the tide"
              " tables."),
        Entry(5, 3, date(1902, 1, 8),
              "The school stove smoked badly; the children wrote their"
              " letters in mittens."),
        Entry(6, 3, date(1910, 10, 3),
              "A new bakery opened by the river and the smell of fresh bread"
              " filled the street."),
    ]


@dataclass
class SearchStack:
    kb: KnowledgeBase
    index: InvertedIndex
    vstore: VectorStore
    provider: HashedEmbeddingProvider
    searcher: HybridSearcher


def build_stack(entries: list[Entry], authors: list[Author]) -> SearchStack:
    kb = KnowledgeBase()
    kb.ingest_records(entries, authors)
    provider = HashedEmbeddingProvider()
    index = build_index((e.id, e.text) for e in entries)
    vstore = VectorStore()
    vstore.index_entries(provider, entries)
    vstore.index_fields(provider, authors)
    return SearchStack(kb, index, vstore, provider, HybridSearcher(kb, index, vstore, provider))


@pytest.fixture()
def hand_stack() -> SearchStack:
    return build_stack(hand_entries(), hand_authors())


@pytest.fixture(scope="session")
def bench_data() -> tuple[list[Entry], list[Author], EvalDataset]:
    return generate_benchmark(seed=BENCH_SEED)


@pytest.fixture(scope="session")
def bench_stack(bench_data) -> SearchStack:
    entries, authors, _ = bench_data
    return build_stack(entries, authors)
