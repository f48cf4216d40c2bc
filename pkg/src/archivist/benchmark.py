"""Deterministic synthetic benchmark: corpus plus a relevance-judged question set.

The generator mirrors the shape of a topic-organised archive study: T topics,
E entries per topic, Q questions per topic with exactly five relevant entries
each. Every topic gets a distinct invented vocabulary with controlled
cross-topic overlap (a shared filler pool), so token-overlap similarity
separates topics. Questions reuse their topic's vocabulary with rule-based
paraphrase noise: synonym substitution plus word dropout, all driven by one
seeded RNG so a seed pins the whole artifact byte-for-byte.

Each vocabulary word gets a synonym that the default local embedding
provider hashes to the same signed slot — the hashed encoder "knows" the
synonym pairs the way a trained encoder knows real ones, while exact term
matching does not. Paraphrased questions therefore separate the two arms:
the lexical arm loses the substituted terms, the semantic arm does not.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import IO, Sequence

from .embeddings import _hash_slot
from .kb import Author, Entry

RELEVANT_PER_QUESTION = 5

_SYLLABLES = (
    "ba", "re", "mo", "ti", "sul", "ka", "ve", "dor", "ni", "pal",
    "zu", "fen", "gri", "lo", "sha", "tur", "mi", "hol", "dra", "sel",
)

_QUESTION_TEMPLATES = (
    "What did people write about {kw}?",
    "How did the diaries describe {kw}?",
    "What happened with {kw} according to the entries?",
    "What can the archive tell us about {kw}?",
)

_ENTRY_TOKENS = 40
_TOPIC_WORDS = 12
_SHARED_WORDS = 24
_QUESTION_KEYWORDS = 8
# Per-question paraphrase strength: share of keywords replaced by synonyms.
# Fully paraphrased questions share no surface vocabulary with their topic's
# entries, which is where the two retrieval arms come apart.
_SYNONYM_RATES = (0.25, 0.5, 0.75, 1.0)
_DROPOUT = 1

# Must match the defaults of HashedEmbeddingProvider for the synonym-collision
# construction to hold.
_PROVIDER_SEED = 0
_PROVIDER_DIM = 64

_DATE_LO = date(1900, 1, 1)
_DATE_HI = date(1916, 12, 31)


@dataclass(frozen=True)
class EvalQuestion:
    id: int
    topic_id: int
    text: str
    relevant_ids: frozenset[int]

    def __post_init__(self) -> None:
        if len(self.relevant_ids) != RELEVANT_PER_QUESTION:
            raise ValueError(
                f"question {self.id}: expected {RELEVANT_PER_QUESTION} relevant ids,"
                f" got {len(self.relevant_ids)}"
            )


@dataclass(frozen=True)
class EvalDataset:
    topics: tuple[tuple[int, str], ...]
    questions: tuple[EvalQuestion, ...]


def _word(rng: random.Random, taken: set[str]) -> str:
    while True:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if w not in taken:
            taken.add(w)
            return w


def _synonym_for(word: str, rng: random.Random, taken: set[str]) -> str:
    """A fresh word the local provider embeds identically to ``word``."""
    target = _hash_slot(_PROVIDER_SEED, _PROVIDER_DIM, word)
    while True:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if w in taken:
            continue
        if _hash_slot(_PROVIDER_SEED, _PROVIDER_DIM, w) == target:
            taken.add(w)
            return w


def _random_date(rng: random.Random) -> date:
    span = (_DATE_HI - _DATE_LO).days
    return _DATE_LO + timedelta(days=rng.randint(0, span))


def _sentences(tokens: list[str]) -> str:
    out = []
    for i in range(0, len(tokens), 10):
        chunk = tokens[i : i + 10]
        out.append(chunk[0].capitalize() + " " + " ".join(chunk[1:]) + ".")
    return " ".join(out)


def generate_benchmark(
    seed: int = 7,
    topics: int = 25,
    entries_per_topic: int = 5,
    questions_per_topic: int = 2,
) -> tuple[list[Entry], list[Author], EvalDataset]:
    """Build (entries, authors, dataset); one author per topic.

    Defaults produce 125 entries, 25 authors and 50 questions. Each question's
    five relevant entries all belong to its topic; when a topic has more than
    five entries the first five (lowest ids) are the judged set.
    """
    if entries_per_topic < RELEVANT_PER_QUESTION:
        raise ValueError(f"entries_per_topic must be >= {RELEVANT_PER_QUESTION}")
    rng = random.Random(seed)
    taken: set[str] = set()
    shared = [_word(rng, taken) for _ in range(_SHARED_WORDS)]

    entries: list[Entry] = []
    authors: list[Author] = []
    topic_list: list[tuple[int, str]] = []
    questions: list[EvalQuestion] = []
    entry_id = 1
    question_id = 1

    for topic_id in range(1, topics + 1):
        vocab = [_word(rng, taken) for _ in range(_TOPIC_WORDS)]
        synonym = {w: _synonym_for(w, rng, taken) for w in vocab}
        topic_list.append((topic_id, f"{vocab[0]} {vocab[1]}"))

        birth = _random_date(rng)
        death = birth + timedelta(days=rng.randint(40 * 365, 80 * 365))
        authors.append(
            Author(
                id=topic_id,
                name=f"{vocab[0].capitalize()} {vocab[1].capitalize()}",
                birth_date=None if topic_id % 11 == 0 else birth,
                death_date=None if topic_id % 7 == 0 else death,
                bio=_sentences(rng.choices(vocab, k=10)),
            )
        )

        topic_entry_ids: list[int] = []
        for _ in range(entries_per_topic):
            tokens = rng.choices(vocab, k=34) + rng.choices(shared, k=_ENTRY_TOKENS - 34)
            rng.shuffle(tokens)
            url = (
                f"https://archive.example/diary/{entry_id}" if entry_id % 10 == 0 else None
            )
            entries.append(
                Entry(
                    id=entry_id,
                    author_id=topic_id,
                    date=_random_date(rng),
                    text=_sentences(tokens),
                    source_url=url,
                )
            )
            topic_entry_ids.append(entry_id)
            entry_id += 1

        relevant = frozenset(topic_entry_ids[:RELEVANT_PER_QUESTION])
        for _ in range(questions_per_topic):
            keywords = rng.sample(vocab, k=_QUESTION_KEYWORDS)
            rate = rng.choice(_SYNONYM_RATES)
            noisy = [synonym[w] if rng.random() < rate else w for w in keywords]
            for _ in range(_DROPOUT):
                noisy.pop(rng.randrange(len(noisy)))
            template = rng.choice(_QUESTION_TEMPLATES)
            questions.append(
                EvalQuestion(
                    id=question_id,
                    topic_id=topic_id,
                    text=template.format(kw=" ".join(noisy)),
                    relevant_ids=relevant,
                )
            )
            question_id += 1

    dataset = EvalDataset(tuple(topic_list), tuple(questions))
    return entries, authors, dataset


# -- jsonl round-trips (docs/data-format.md) ---------------------------------


def write_corpus_jsonl(entries: Sequence[Entry], authors: Sequence[Author], sink: IO[str]) -> None:
    for a in authors:
        sink.write(
            json.dumps(
                {
                    "id": a.id,
                    "name": a.name,
                    "birth_date": a.birth_date.isoformat() if a.birth_date else None,
                    "death_date": a.death_date.isoformat() if a.death_date else None,
                    "bio": a.bio,
                },
                ensure_ascii=False,
            )
            + "\n"
        )
    for e in entries:
        sink.write(
            json.dumps(
                {
                    "id": e.id,
                    "author_id": e.author_id,
                    "date": e.date.isoformat(),
                    "text": e.text,
                    "source_url": e.source_url,
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def save_dataset(dataset: EvalDataset, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for topic_id, name in dataset.topics:
            fh.write(json.dumps({"kind": "topic", "id": topic_id, "name": name}) + "\n")
        for q in dataset.questions:
            fh.write(
                json.dumps(
                    {
                        "kind": "question",
                        "id": q.id,
                        "topic_id": q.topic_id,
                        "text": q.text,
                        "relevant_ids": sorted(q.relevant_ids),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_dataset(path: str | Path) -> EvalDataset:
    topics: list[tuple[int, str]] = []
    questions: list[EvalQuestion] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("kind") == "topic":
                topics.append((rec["id"], rec["name"]))
            elif rec.get("kind") == "question":
                questions.append(
                    EvalQuestion(
                        id=rec["id"],
                        topic_id=rec["topic_id"],
                        text=rec["text"],
                        relevant_ids=frozenset(rec["relevant_ids"]),
                    )
                )
            else:
                raise ValueError(f"unknown dataset record kind {rec.get('kind')!r}")
    return EvalDataset(tuple(topics), tuple(questions))
