"""Wires the stores, indexes, providers and gateway from a ServiceConfig.

One Runtime instance backs both the CLI and the HTTP service. Indexes are
rebuilt from the knowledge base and swapped into the searcher atomically;
persistence of the index files is explicit (CLI `index`, or after an ingest
through the API when a data directory is in use).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import IO

from .config import ServiceConfig
from .embeddings import EmbeddingProvider, HashedEmbeddingProvider, RemoteEmbeddingProvider
from .errors import EmptyCorpusError
from .fusion import FusionParams, HybridSearcher
from .gateway import HttpLlmGateway, LlmGateway, OfflineGateway
from .kb import KnowledgeBase
from .lexical import InvertedIndex, build_index
from .orchestrator import Orchestrator, SessionStore
from .sqlbridge import SqlFilterStage
from .vectors import VectorStore

logger = logging.getLogger(__name__)


def make_provider(config: ServiceConfig) -> EmbeddingProvider:
    if config.embed_provider == "remote":
        return RemoteEmbeddingProvider(
            endpoint=config.embed_endpoint,
            model_id=config.embed_model,
            dim=config.embed_dim,
        )
    return HashedEmbeddingProvider(dim=config.embed_dim, seed=config.embed_seed)


def make_gateway(config: ServiceConfig) -> LlmGateway:
    if config.llm_endpoint:
        return HttpLlmGateway(config.llm_endpoint, api_key=config.llm_api_key)
    return OfflineGateway()


class Runtime:
    def __init__(
        self,
        config: ServiceConfig | None = None,
        kb: KnowledgeBase | None = None,
        provider: EmbeddingProvider | None = None,
        gateway: LlmGateway | None = None,
        ephemeral: bool = False,
    ):
        self.config = config or ServiceConfig()
        if kb is not None:
            self.kb = kb
        elif ephemeral:
            self.kb = KnowledgeBase(":memory:")
        else:
            Path(self.config.data_dir).mkdir(parents=True, exist_ok=True)
            self.kb = KnowledgeBase(str(self.config.kb_path))
        self.ephemeral = ephemeral or kb is not None
        self.provider = provider or make_provider(self.config)
        self.gateway = gateway or make_gateway(self.config)
        self.index: InvertedIndex | None = None
        self.vstore = VectorStore()
        self.sessions = SessionStore()

        self.searcher = HybridSearcher(
            self.kb, self.index, self.vstore, self.provider, scorer=self.config.scorer
        )
        self.sql_stage = SqlFilterStage(
            self.kb, self.gateway, model_id=self.config.model_sql_gen
        )
        self.orchestrator = Orchestrator(
            self.searcher,
            self.gateway,
            sql_stage=self.sql_stage,
            query_model=self.config.model_query_gen,
            answer_model=self.config.model_answer_gen,
            url_template=self.config.url_template,
            base_url=self.config.base_url,
            history_window=self.config.history_window,
        )

    # -- indexes ---------------------------------------------------------------

    def reindex(self) -> dict[str, int]:
        """Rebuild both arms from the knowledge base and swap them in."""
        entries = list(self.kb.iter_entries())
        if not entries:
            raise EmptyCorpusError("knowledge base holds no entries")
        index = build_index((e.id, e.text) for e in entries)
        vstore = VectorStore()
        n_vec = vstore.index_entries(self.provider, entries)
        n_fields, n_skipped = vstore.index_fields(
            self.provider, self.kb.iter_authors(), self.config.semantic_fields
        )
        self.index = index
        self.vstore = vstore
        self.searcher.index = index
        self.searcher.vstore = vstore
        return {
            "lexical_docs": index.doc_count,
            "entry_vectors": n_vec,
            "field_vectors": n_fields,
            "fields_skipped": n_skipped,
        }

    def save_indexes(self) -> None:
        if self.ephemeral:
            return
        if self.index is not None:
            self.index.save(self.config.lexical_index_path)
        self.vstore.save(self.config.vector_store_path)

    def load_indexes(self) -> bool:
        """Load persisted index files when both exist; returns success."""
        lex = self.config.lexical_index_path
        vec = self.config.vector_store_path
        if not (lex.exists() and vec.exists()):
            return False
        self.index = InvertedIndex.load(lex)
        self.vstore = VectorStore.load(vec)
        self.searcher.index = self.index
        self.searcher.vstore = self.vstore
        return True

    def ingest(self, stream: IO[bytes] | IO[str], format: str) -> tuple[int, int]:
        return self.kb.ingest_corpus(stream, format)

    # -- state -------------------------------------------------------------------

    def default_params(self) -> FusionParams:
        return FusionParams(
            alpha=self.config.alpha,
            gamma=self.config.gamma,
            k=self.config.k,
            fields=self.config.semantic_fields,
        )

    @property
    def gateway_ready(self) -> bool:
        return not isinstance(self.gateway, OfflineGateway)

    def health(self) -> dict:
        return {
            "status": "ok",
            "kb_ready": True,
            "lexical_ready": self.index is not None,
            "vector_ready": len(self.vstore) > 0,
            "gateway_ready": self.gateway_ready,
            "entries": self.kb.entry_count(),
            "authors": self.kb.author_count(),
        }
