"""Service configuration with flags > environment > config file > defaults.

The defaults are valid with zero network: local hashed embeddings and an
offline gateway. A JSON config file may set any field by name; the three
recognized environment variables are LLM_ENDPOINT, LLM_API_KEY and
EMBED_ENDPOINT.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidArgumentError

ENV_VARS = {
    "LLM_ENDPOINT": "llm_endpoint",
    "LLM_API_KEY": "llm_api_key",
    "EMBED_ENDPOINT": "embed_endpoint",
}


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    base_url: str = "http://127.0.0.1:8080"
    data_dir: str = "./archivist-data"

    llm_endpoint: str | None = None
    llm_api_key: str | None = None
    model_query_gen: str = "query-gen"
    model_sql_gen: str = "sql-gen"
    model_answer_gen: str = "answer-gen"

    embed_provider: str = "local"  # "local" | "remote"
    embed_endpoint: str | None = None
    embed_model: str = "remote-encoder"
    embed_dim: int = 64
    embed_seed: int = 0

    alpha: float = 0.9
    gamma: float = 1.0
    k: int = 5
    scorer: str = "tfidf"
    semantic_fields: tuple[tuple[str, str], ...] = (("authors", "bio"),)

    url_template: str = "{base_url}/entry/{id}"
    history_window: int = 10

    def __post_init__(self) -> None:
        if self.embed_provider not in ("local", "remote"):
            raise InvalidArgumentError(f"unknown embed_provider {self.embed_provider!r}")
        if self.scorer not in ("tfidf", "bm25"):
            raise InvalidArgumentError(f"unknown scorer {self.scorer!r}")
        if self.embed_provider == "remote" and not self.embed_endpoint:
            raise InvalidArgumentError("embed_provider=remote requires embed_endpoint")
        object.__setattr__(
            self, "semantic_fields", tuple(tuple(f) for f in self.semantic_fields)
        )

    @property
    def kb_path(self) -> Path:
        return Path(self.data_dir) / "kb.sqlite"

    @property
    def lexical_index_path(self) -> Path:
        return Path(self.data_dir) / "lexical.idx"

    @property
    def vector_store_path(self) -> Path:
        return Path(self.data_dir) / "vectors.npz"


_FIELD_NAMES = {f.name for f in dataclasses.fields(ServiceConfig)}


def load_config(
    config_file: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ServiceConfig:
    """Merge the three sources onto the defaults, highest precedence last."""
    env = os.environ if env is None else env
    merged: dict[str, Any] = {}
    if config_file is not None:
        raw = json.loads(Path(config_file).read_text(encoding="utf-8"))
        unknown = set(raw) - _FIELD_NAMES
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        merged.update(raw)
    for var, key in ENV_VARS.items():
        if env.get(var):
            merged[key] = env[var]
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    return ServiceConfig(**merged)
