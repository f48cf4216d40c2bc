"""HTTP surface: JSON over HTTP, response shapes published in docs/api/.

The /search route never touches the LLM gateway; message turns are the only
LLM-driven path. A turn whose answer stage lost the gateway comes back as
503 with the persisted turn embedded, so clients can render the degraded
answer and badge it.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import ServiceConfig
from .errors import (
    ArchivistError,
    EmptyCorpusError,
    IngestError,
    InvalidArgumentError,
    NotFoundError,
)
from .fusion import FusionParams
from .orchestrator import Turn
from .runtime import Runtime


class ParamsModel(BaseModel):
    alpha: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    gamma: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    k: Optional[int] = Field(default=None, ge=1)
    scorer: Optional[str] = None


class MessageRequest(BaseModel):
    text: str
    params: Optional[ParamsModel] = None


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def create_app(config: ServiceConfig | None = None, runtime: Runtime | None = None) -> FastAPI:
    runtime = runtime or Runtime(config)
    app = FastAPI(title="archivist", version="0.1.0")
    app.state.runtime = runtime
    # The browser client may be served from another origin; auth/TLS are a
    # reverse-proxy concern, so permissive CORS is fine here.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def resolve_params(
        alpha: float | None = None,
        gamma: float | None = None,
        k: int | None = None,
        scorer: str | None = None,
    ) -> tuple[FusionParams, str | None]:
        base = runtime.default_params()
        if scorer is not None and scorer not in ("tfidf", "bm25"):
            raise InvalidArgumentError(f"unknown scorer {scorer!r}")
        return (
            FusionParams(
                alpha=base.alpha if alpha is None else alpha,
                gamma=base.gamma if gamma is None else gamma,
                k=base.k if k is None else k,
                fields=base.fields,
            ),
            scorer,
        )

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(InvalidArgumentError)
    async def _invalid(request: Request, exc: InvalidArgumentError):
        return _error(400, "invalid_argument", str(exc))

    @app.exception_handler(IngestError)
    async def _ingest_error(request: Request, exc: IngestError):
        return _error(400, "ingest_error", str(exc))

    @app.exception_handler(ArchivistError)
    async def _other(request: Request, exc: ArchivistError):
        return _error(500, "internal_error", str(exc))

    # -- sessions ---------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session():
        session = runtime.sessions.create()
        return {"session_id": session.id, "created_at": session.created_at}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = runtime.sessions.get(session_id)
        return {
            "session_id": session.id,
            "created_at": session.created_at,
            "turns": [t.to_dict() for t in session.turns],
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageRequest):
        session = runtime.sessions.get(session_id)
        p = body.params
        if p is None:
            params, scorer = resolve_params()
        else:
            params, scorer = resolve_params(p.alpha, p.gamma, p.k, p.scorer)
        with runtime.sessions.turn_lock(session_id):
            turn: Turn = runtime.orchestrator.handle_turn(
                session, body.text, params, scorer=scorer
            )
        if turn.degraded:
            return _error(
                503, "gateway_degraded", "answer generation degraded", turn=turn.to_dict()
            )
        return turn.to_dict()

    # -- retrieval --------------------------------------------------------------

    @app.get("/search")
    def search(
        q: str,
        alpha: Optional[float] = None,
        gamma: Optional[float] = None,
        k: Optional[int] = None,
        scorer: Optional[str] = None,
    ):
        params, chosen = resolve_params(alpha, gamma, k, scorer)
        candidates = runtime.searcher.hybrid_search(q, params, scorer=chosen)
        return {"query": q, "candidates": [c.to_dict() for c in candidates]}

    @app.get("/entries/{entry_id}")
    def get_entry(entry_id: int):
        entry = runtime.kb.get_entry(entry_id)
        url = entry.source_url or runtime.config.url_template.format(
            base_url=runtime.config.base_url, id=entry.id
        )
        author = runtime.kb.get_author(entry.author_id)
        return {
            "id": entry.id,
            "author_id": entry.author_id,
            "author_name": author.name,
            "date": entry.date.isoformat(),
            "text": entry.text,
            "source_url": entry.source_url,
            "url": url,
        }

    # -- corpus -----------------------------------------------------------------

    @app.post("/ingest")
    def ingest(
        format: str = Form("jsonl"),
        entries: UploadFile | None = File(default=None),
        authors: UploadFile | None = File(default=None),
    ):
        if entries is None and authors is None:
            raise InvalidArgumentError("provide at least one of 'entries'/'authors' files")
        total_entries = 0
        total_authors = 0
        # Authors first so csv entry batches can reference them.
        for upload in (authors, entries):
            if upload is None:
                continue
            n_e, n_a = runtime.ingest(upload.file, format)
            total_entries += n_e
            total_authors += n_a
        try:
            runtime.reindex()
            runtime.save_indexes()
            reindexed = True
        except EmptyCorpusError:
            reindexed = False
        return {
            "entries_loaded": total_entries,
            "authors_loaded": total_authors,
            "reindexed": reindexed,
        }

    # -- meta -------------------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return runtime.health()

    @app.get("/config")
    def get_config():
        cfg = runtime.config
        return {
            "alpha": cfg.alpha,
            "gamma": cfg.gamma,
            "k": cfg.k,
            "scorer": cfg.scorer,
            "base_url": cfg.base_url,
        }

    return app
