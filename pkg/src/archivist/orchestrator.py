"""Multi-turn dialog engine.

One turn runs: standalone-query generation from the dialog history ->
guarded SQL filter -> hybrid search (respecting the filter) -> grounded
answer generation -> citation-marker hyperlinking. Every intermediate
artifact lands on the Turn record so a reviewer can recompute the ranking
from the stores and parameters alone.

Gateway failures never abort a turn: query generation falls back to the raw
user message, the SQL stage degrades to no filter, and answer generation
yields an apologetic placeholder flagged as degraded.
"""

from __future__ import annotations

import re
import secrets
import threading
import time
from dataclasses import dataclass, field

from .errors import GatewayError, InvalidArgumentError, NotFoundError
from .fusion import FusionParams, HybridSearcher, ScoredCandidate
from .gateway import ChatMessage, CompletionRequest, LlmGateway
from .prompts import build_answer_messages, build_query_gen_messages
from .sqlbridge import SqlFilterStage

DEFAULT_URL_TEMPLATE = "{base_url}/entry/{id}"
DEFAULT_HISTORY_WINDOW = 10

NO_SOURCES_ANSWER = (
    "I could not find any passages in the archive that match this question, "
    "so I cannot give a grounded answer."
)
DEGRADED_ANSWER = (
    "I'm sorry - the language model is unreachable right now, so I cannot "
    "compose an answer. The retrieved sources are still listed below."
)

_MARKER_RE = re.compile(r"\[(\d+)\]")


@dataclass(frozen=True)
class Citation:
    marker: int
    entry_id: int
    url: str

    def to_dict(self) -> dict:
        return {"marker": self.marker, "entry_id": self.entry_id, "url": self.url}


@dataclass
class Turn:
    user_text: str
    generated_query: str
    sql_filter: set[int] | None
    candidates: list[ScoredCandidate]
    answer_raw: str
    answer_rendered: str
    citations: list[Citation]
    degraded: bool = False
    repairs: int = 0

    def to_dict(self) -> dict:
        return {
            "user_text": self.user_text,
            "generated_query": self.generated_query,
            "sql_filter": sorted(self.sql_filter) if self.sql_filter is not None else None,
            "candidates": [c.to_dict() for c in self.candidates],
            "answer_raw": self.answer_raw,
            "answer_rendered": self.answer_rendered,
            "citations": [c.to_dict() for c in self.citations],
            "degraded": self.degraded,
            "repairs": self.repairs,
        }


@dataclass
class Session:
    id: str
    created_at: float
    turns: list[Turn] = field(default_factory=list)


class SessionStore:
    """In-memory sessions with unguessable ids and per-session turn locks."""

    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}
        self._turn_locks: dict[str, threading.Lock] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        session = Session(id=secrets.token_hex(16), created_at=time.time())
        with self._lock:
            self._sessions[session.id] = session
            self._turn_locks[session.id] = threading.Lock()
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"no session {session_id!r}")
        return session

    def turn_lock(self, session_id: str) -> threading.Lock:
        with self._lock:
            lock = self._turn_locks.get(session_id)
        if lock is None:
            raise NotFoundError(f"no session {session_id!r}")
        return lock


def insert_hyperlinks(
    answer_raw: str,
    candidates: list[ScoredCandidate],
    url_template: str = DEFAULT_URL_TEMPLATE,
    base_url: str = "",
    source_urls: dict[int, str] | None = None,
) -> tuple[str, list[Citation], int]:
    """Replace in-range [n] markers with markdown links to the source entry.

    The n-th candidate backs marker [n]; a per-entry source_url overrides the
    template. Out-of-range markers are stripped and counted as repairs.
    Returns (rendered text, citations in first-appearance order, repairs).
    """
    source_urls = source_urls or {}
    citations: dict[int, Citation] = {}
    repairs = 0

    def _replace(match: re.Match) -> str:
        nonlocal repairs
        marker = int(match.group(1))
        if 1 <= marker <= len(candidates):
            entry_id = candidates[marker - 1].entry_id
            url = source_urls.get(entry_id) or url_template.format(base_url=base_url, id=entry_id)
            citations.setdefault(marker, Citation(marker, entry_id, url))
            return f"[[{marker}]]({url})"
        repairs += 1
        return ""

    rendered = _MARKER_RE.sub(_replace, answer_raw)
    return rendered, list(citations.values()), repairs


class Orchestrator:
    def __init__(
        self,
        searcher: HybridSearcher,
        gateway: LlmGateway,
        sql_stage: SqlFilterStage | None = None,
        query_model: str = "query-gen",
        answer_model: str = "answer-gen",
        url_template: str = DEFAULT_URL_TEMPLATE,
        base_url: str = "",
        history_window: int = DEFAULT_HISTORY_WINDOW,
    ):
        self.searcher = searcher
        self.kb = searcher.kb
        self.gateway = gateway
        self.sql_stage = sql_stage
        self.query_model = query_model
        self.answer_model = answer_model
        self.url_template = url_template
        self.base_url = base_url
        self.history_window = history_window

    # -- stages ---------------------------------------------------------------

    def generate_search_query(self, history: list[ChatMessage]) -> str:
        """One-line standalone query from the dialog; the raw last user
        message on gateway failure."""
        if not history or history[-1].role != "user":
            raise InvalidArgumentError("history must end with a user message")
        messages = build_query_gen_messages(history)
        try:
            completion = self.gateway.complete(
                CompletionRequest(self.query_model, tuple(messages), temperature=0.0)
            )
        except GatewayError:
            return history[-1].content
        for line in completion.strip().splitlines():
            if line.strip():
                return line.strip()
        return history[-1].content

    def generate_answer(self, question: str, fragments: list[str]) -> tuple[str, bool]:
        """(answer text with [n] markers, degraded flag)."""
        if not fragments:
            return NO_SOURCES_ANSWER, False
        messages = build_answer_messages(question, fragments)
        try:
            answer = self.gateway.complete(
                CompletionRequest(self.answer_model, tuple(messages), temperature=0.0)
            )
            return answer, False
        except GatewayError:
            return DEGRADED_ANSWER, True

    def history_messages(self, session: Session, user_text: str) -> list[ChatMessage]:
        messages: list[ChatMessage] = []
        for turn in session.turns:
            messages.append(ChatMessage("user", turn.user_text))
            messages.append(ChatMessage("assistant", turn.answer_raw))
        messages.append(ChatMessage("user", user_text))
        return messages[-self.history_window :]

    # -- the turn ---------------------------------------------------------------

    def handle_turn(
        self,
        session: Session,
        user_text: str,
        params: FusionParams | None = None,
        scorer: str | None = None,
    ) -> Turn:
        if not user_text.strip():
            raise InvalidArgumentError("user_text must be non-empty")
        params = params or FusionParams()

        history = self.history_messages(session, user_text)
        generated_query = self.generate_search_query(history)

        sql_filter = self.sql_stage.filter_ids(generated_query) if self.sql_stage else None

        candidates = self.searcher.hybrid_search(
            generated_query, params, filter=sql_filter, scorer=scorer
        )

        fragments = [self.kb.get_entry(c.entry_id).text for c in candidates]
        answer_raw, degraded = self.generate_answer(user_text, fragments)

        source_urls = {}
        for c in candidates:
            url = self.kb.get_entry(c.entry_id).source_url
            if url:
                source_urls[c.entry_id] = url
        answer_rendered, citations, repairs = insert_hyperlinks(
            answer_raw,
            candidates,
            url_template=self.url_template,
            base_url=self.base_url,
            source_urls=source_urls,
        )

        turn = Turn(
            user_text=user_text,
            generated_query=generated_query,
            sql_filter=sql_filter,
            candidates=candidates,
            answer_raw=answer_raw,
            answer_rendered=answer_rendered,
            citations=citations,
            degraded=degraded,
            repairs=repairs,
        )
        session.turns.append(turn)
        return turn
