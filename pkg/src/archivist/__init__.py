"""archivist: retrieval-augmented assistant for archival text collections."""

from .analysis import AnalyzerConfig, analyze
from .benchmark import EvalDataset, EvalQuestion, generate_benchmark
from .config import ServiceConfig, load_config
from .embeddings import (
    Embedding,
    EmbeddingProvider,
    HashedEmbeddingProvider,
    RemoteEmbeddingProvider,
    cosine,
)
from .evaluation import (
    AnnotationMatrix,
    EvalConfig,
    evaluate_search,
    krippendorff_alpha,
    precision_at_k,
)
from .fusion import (
    FusionParams,
    HybridSearcher,
    ScoredCandidate,
    blend_arms,
    blend_fields,
    normalize_minmax,
)
from .gateway import (
    ChatMessage,
    CompletionRequest,
    HttpLlmGateway,
    OfflineGateway,
    ScriptedStubGateway,
    TranscriptRecorder,
    fingerprint,
)
from .kb import Author, Entry, KnowledgeBase, SchemaDescription
from .lexical import InvertedIndex, build_index, score_bm25, score_tfidf, search_lexical
from .orchestrator import Citation, Orchestrator, Session, SessionStore, Turn, insert_hyperlinks
from .runtime import Runtime
from .sqlbridge import SqlFilterStage, SqlQuery, build_text2sql_prompt, extract_sql
from .sqlguard import GuardVerdict, validate_select_only
from .vectors import VectorStore

__version__ = "0.1.0"
