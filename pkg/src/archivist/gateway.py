"""Chat-completion gateway: one interface, three implementations.

* HttpLlmGateway — OpenAI-style chat completions over HTTP, with bounded
  retries on transient failures.
* ScriptedStubGateway — deterministic stand-in used by every automated test:
  maps a request fingerprint (hash of the role-tagged message contents) to a
  canned response, or to a scripted failure. An unscripted fingerprint is a
  loud StubMissError, never a silent fallback.
* OfflineGateway — always fails with GatewayError("offline"); lets the
  pipeline run end-to-end with degraded answers when no endpoint is set.

A TranscriptRecorder wraps any gateway and logs request/response pairs to an
append-only JSONL file; a transcript can be replayed by loading it into a
stub, which reproduces the original pipeline outputs exactly.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Protocol, Sequence

import httpx

from .errors import GatewayError, StubMissError

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message must have content")


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


def fingerprint(messages: Sequence[ChatMessage]) -> str:
    """Stable hash of the role-tagged contents; the stub's lookup key."""
    h = hashlib.sha256()
    for m in messages:
        h.update(m.role.encode("utf-8"))
        h.update(b"\x1f")
        h.update(m.content.encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()


class LlmGateway(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class HttpLlmGateway:
    """Client for an OpenAI-style /chat/completions endpoint."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 2,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.max_retries = max_retries
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: GatewayError | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(0.5 * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.endpoint, json=payload)
            except httpx.TimeoutException as exc:
                last_error = GatewayError(f"request timed out: {exc}", category="timeout")
                continue
            except httpx.HTTPError as exc:
                last_error = GatewayError(f"request failed: {exc}", category="network")
                continue
            if resp.status_code in (401, 403):
                # Auth failures are not transient; do not retry.
                raise GatewayError(f"authentication failed ({resp.status_code})", category="auth")
            if resp.status_code >= 500 or resp.status_code == 429:
                last_error = GatewayError(f"endpoint returned {resp.status_code}", category="http")
                continue
            if resp.status_code != 200:
                raise GatewayError(f"endpoint returned {resp.status_code}", category="http")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise GatewayError(f"malformed completion response: {exc}", category="http")
        assert last_error is not None
        raise last_error


class ScriptedStubGateway:
    """Fingerprint -> canned response map; the offline test double."""

    def __init__(self) -> None:
        self._responses: dict[str, str] = {}
        self._failures: dict[str, str] = {}
        self.calls: list[CompletionRequest] = []

    def script(self, messages: Sequence[ChatMessage], response: str) -> str:
        """Register a canned response; returns the fingerprint for reference."""
        fp = fingerprint(messages)
        self._responses[fp] = response
        return fp

    def script_fingerprint(self, fp: str, response: str) -> None:
        self._responses[fp] = response

    def script_failure(self, messages: Sequence[ChatMessage], category: str = "timeout") -> str:
        """Make a request fail with a GatewayError of the given category."""
        fp = fingerprint(messages)
        self._failures[fp] = category
        return fp

    def complete(self, request: CompletionRequest) -> str:
        self.calls.append(request)
        fp = fingerprint(request.messages)
        if fp in self._failures:
            raise GatewayError("scripted failure", category=self._failures[fp])
        if fp not in self._responses:
            preview = "\n".join(f"  {m.role}: {m.content[:120]!r}" for m in request.messages)
            raise StubMissError(fp, preview)
        return self._responses[fp]


class OfflineGateway:
    """Used when no endpoint is configured; every call fails fast."""

    def complete(self, request: CompletionRequest) -> str:
        raise GatewayError("no LLM endpoint configured", category="offline")


@dataclass
class TranscriptRecord:
    fingerprint: str
    request: dict
    response: str | None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "request": self.request,
            "response": self.response,
            "error": self.error,
        }


class TranscriptRecorder:
    """Wraps a gateway and logs every exchange for later replay."""

    def __init__(self, inner: LlmGateway):
        self.inner = inner
        self.records: list[TranscriptRecord] = []

    def complete(self, request: CompletionRequest) -> str:
        req_dict = {
            "model_id": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        fp = fingerprint(request.messages)
        try:
            response = self.inner.complete(request)
        except GatewayError as exc:
            self.records.append(
                TranscriptRecord(fp, req_dict, None, error=exc.category)
            )
            raise
        self.records.append(TranscriptRecord(fp, req_dict, response))
        return response

    def save(self, sink: str | Path | IO[str]) -> None:
        try:
            if isinstance(sink, (str, Path)):
                with open(sink, "a", encoding="utf-8") as fh:
                    self._write(fh)
            else:
                self._write(sink)
        except OSError as exc:
            raise GatewayError(f"cannot write transcript: {exc}", category="io") from exc

    def _write(self, fh: IO[str]) -> None:
        for rec in self.records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def load_transcript(source: str | Path | IO[str]) -> list[TranscriptRecord]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        records.append(
            TranscriptRecord(raw["fingerprint"], raw["request"], raw["response"], raw.get("error"))
        )
    return records


def stub_from_transcript(records: Sequence[TranscriptRecord]) -> ScriptedStubGateway:
    """Build a stub that replays a recorded session byte-for-byte."""
    stub = ScriptedStubGateway()
    for rec in records:
        if rec.error is not None:
            stub._failures[rec.fingerprint] = rec.error
        elif rec.response is not None:
            stub.script_fingerprint(rec.fingerprint, rec.response)
    return stub
