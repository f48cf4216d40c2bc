"""Natural-language-to-SQL filtering stage.

Flow per question: build a schema-grounded prompt -> ask the gateway ->
extract the SQL from the completion -> validate it against the SELECT-only
subset -> execute it read-only -> return the matching entry-id set.

Every failure along the way degrades to "no filter" with a logged warning;
the user's turn proceeds with unfiltered retrieval. The one exception is a
stub miss, which is a test bug and propagates.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import ExecutionFailedError, ExtractionFailedError, GatewayError
from .gateway import CompletionRequest, LlmGateway
from .kb import KnowledgeBase
from .prompts import DEFAULT_FEW_SHOTS, NO_FILTER_SENTINEL, build_sql_gen_messages
from .sqlguard import GuardVerdict, validate_select_only

logger = logging.getLogger(__name__)

_FENCED_SQL_RE = re.compile(r"```(?:sql)?\s*\n(.*?)```", re.DOTALL | re.IGNORECASE)


@dataclass(frozen=True)
class SqlQuery:
    """SQL text plus the verdict that admitted (or rejected) it."""

    text: str
    origin: str  # "llm" | "user"
    verdict: GuardVerdict

    def __post_init__(self) -> None:
        if self.origin not in ("llm", "user"):
            raise ValueError(f"unknown origin {self.origin!r}")


def extract_sql(completion: str) -> str:
    """SQL from an LLM completion: the last fenced block wins; otherwise the
    last statement-like line ending in a semicolon. Trailing ';' is stripped."""
    blocks = _FENCED_SQL_RE.findall(completion)
    if blocks:
        return blocks[-1].strip().rstrip(";").strip()
    candidates = [
        line.strip()
        for line in completion.splitlines()
        if line.strip().endswith(";")
    ]
    if candidates:
        return candidates[-1].rstrip(";").strip()
    raise ExtractionFailedError("completion contains no extractable SQL")


def build_text2sql_prompt(question: str, schema_text: str, few_shots=DEFAULT_FEW_SHOTS) -> str:
    """The full prompt text (single user message) for the SQL stage."""
    return build_sql_gen_messages(question, schema_text, few_shots)[0].content


class SqlFilterStage:
    """Guarded text-to-SQL filter bound to a knowledge base and gateway."""

    def __init__(
        self,
        kb: KnowledgeBase,
        gateway: LlmGateway,
        model_id: str = "sql-gen",
        few_shots=DEFAULT_FEW_SHOTS,
    ):
        self.kb = kb
        self.gateway = gateway
        self.model_id = model_id
        self.few_shots = few_shots
        self._schema_cols = {
            t: frozenset(cols) for t, cols in self.kb.schema_description().table_columns.items()
        }

    def filter_ids(self, question: str) -> set[int] | None:
        """Entry-id set for the question's structured constraints, or None
        when no filter applies (model said so, or a stage failed)."""
        messages = build_sql_gen_messages(
            question, self.kb.render_schema_description(), self.few_shots
        )
        try:
            completion = self.gateway.complete(
                CompletionRequest(self.model_id, tuple(messages), temperature=0.0)
            )
        except GatewayError as exc:
            logger.warning("sql filter: gateway failed (%s); proceeding unfiltered", exc.category)
            return None

        if re.search(rf"\b{NO_FILTER_SENTINEL}\b", completion):
            return None

        try:
            sql_text = extract_sql(completion)
        except ExtractionFailedError:
            logger.warning("sql filter: no SQL in completion; proceeding unfiltered")
            return None

        verdict = validate_select_only(sql_text, self._schema_cols)
        if not verdict.accepted:
            logger.warning(
                "sql filter: rejected (%s: %s); proceeding unfiltered",
                verdict.reason,
                verdict.detail,
            )
            return None

        query = SqlQuery(sql_text, origin="llm", verdict=verdict)
        try:
            _columns, rows = self.kb.execute_select(query)
        except ExecutionFailedError as exc:
            logger.warning("sql filter: execution failed (%s); proceeding unfiltered", exc)
            return None

        ids: set[int] = set()
        for row in rows:
            value = row[0] if row else None
            if not isinstance(value, int):
                logger.warning(
                    "sql filter: projection is not an id column; proceeding unfiltered"
                )
                return None
            ids.add(value)
        return ids
