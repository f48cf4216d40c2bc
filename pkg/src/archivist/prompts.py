"""Prompt templates and message builders.

Templates live under data/prompts/ as versioned files so wording changes show
up in diffs; the builders here are pure and deterministic, which lets tests
compute the exact fingerprint a pipeline stage will send to the gateway.
"""

from __future__ import annotations

from importlib import resources

from .gateway import ChatMessage

NO_FILTER_SENTINEL = "NO_FILTER"

# Worked examples for the SQL stage: (question, reasoning, sql).
DEFAULT_FEW_SHOTS = (
    (
        "What did people write about harvests before 1910?",
        "The date bound is structured; the harvest topic is left to search.",
        "SELECT id FROM entries WHERE date < '1910-01-01'",
    ),
    (
        "Show entries by authors born after 1880.",
        "Birth year lives on authors, so join entries to authors and compare"
        " birth_date.",
        "SELECT entries.id FROM entries JOIN authors ON entries.author_id ="
        " authors.id WHERE authors.birth_date > '1880-12-31'",
    ),
)


def _load(name: str) -> str:
    return (
        resources.files("archivist.data.prompts").joinpath(name).read_text(encoding="utf-8")
    )


def build_query_gen_messages(history: list[ChatMessage]) -> list[ChatMessage]:
    """System instruction + the dialog window; last message must be the user's."""
    if not history or history[-1].role != "user":
        raise ValueError("history must end with a user message")
    return [ChatMessage("system", _load("query_generation.txt").strip()), *history]


def render_few_shots(few_shots) -> str:
    blocks = []
    for question, reasoning, sql in few_shots:
        blocks.append(
            f"Question: {question}\n{reasoning}\n```sql\n{sql}\n```\n"
        )
    return "\n".join(blocks)


def build_sql_gen_messages(
    question: str,
    schema_text: str,
    few_shots=DEFAULT_FEW_SHOTS,
) -> list[ChatMessage]:
    prompt = _load("sql_generation.txt").format(
        schema=schema_text,
        few_shots=render_few_shots(few_shots),
        question=question,
    )
    return [ChatMessage("user", prompt)]


def build_answer_messages(question: str, fragments: list[str]) -> list[ChatMessage]:
    numbered = "\n\n".join(f"[{i}] {text}" for i, text in enumerate(fragments, start=1))
    prompt = _load("answer_generation.txt").format(fragments=numbered, question=question)
    return [ChatMessage("user", prompt)]
