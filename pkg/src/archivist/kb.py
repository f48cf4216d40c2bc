"""Relational knowledge base: authors and dated text entries.

Backed by embedded SQLite so read-only SQL filters run with no external
service. One connection guarded by a lock: readers are serialized, ingestion
is exclusive, which satisfies the single-writer contract.

Corpus file formats (see docs/data-format.md):
  * jsonl — one record per line; author records carry ``name``, entry
    records carry ``author_id`` + ``text``. A single stream may mix both.
  * csv — homogeneous per file; the header row selects the record type.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sqlite3
import threading
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Sequence

from .errors import ExecutionFailedError, IngestError, NotFoundError

ENTRY_FIELDS = ("id", "author_id", "date", "text", "source_url")
AUTHOR_FIELDS = ("id", "name", "birth_date", "death_date", "bio")

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS authors (
    id         INTEGER PRIMARY KEY,
    name       TEXT NOT NULL,
    birth_date TEXT,
    death_date TEXT,
    bio        TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS entries (
    id         INTEGER PRIMARY KEY,
    author_id  INTEGER NOT NULL REFERENCES authors(id),
    date       TEXT NOT NULL,
    text       TEXT NOT NULL,
    source_url TEXT
);
CREATE INDEX IF NOT EXISTS idx_entries_author ON entries(author_id);
CREATE INDEX IF NOT EXISTS idx_entries_date ON entries(date);
"""

# Prose used when rendering the schema for LLM prompts. Kept next to the DDL
# so a column added above is caught by the round-trip test when missing here.
_COLUMN_DOCS = {
    ("authors", "id"): ("INTEGER", "unique author identifier"),
    ("authors", "name"): ("TEXT", "author's full name"),
    ("authors", "birth_date"): ("TEXT", "date of birth, ISO-8601 'YYYY-MM-DD', may be NULL"),
    ("authors", "death_date"): ("TEXT", "date of death, ISO-8601 'YYYY-MM-DD', may be NULL"),
    ("authors", "bio"): ("TEXT", "short free-text biography, may be empty"),
    ("entries", "id"): ("INTEGER", "unique entry identifier"),
    ("entries", "author_id"): ("INTEGER", "references authors.id (the writer of this entry)"),
    ("entries", "date"): ("TEXT", "date the entry was written, ISO-8601 'YYYY-MM-DD'"),
    ("entries", "text"): ("TEXT", "full text of the entry"),
    ("entries", "source_url"): ("TEXT", "link to the original page, may be NULL"),
}

_RELATIONS = ("entries.author_id -> authors.id (each entry is written by exactly one author)",)


@dataclass(frozen=True)
class Author:
    id: int
    name: str
    birth_date: date | None = None
    death_date: date | None = None
    bio: str = ""

    def __post_init__(self) -> None:
        if self.birth_date and self.death_date and self.birth_date > self.death_date:
            raise ValueError(f"author {self.id}: birth_date after death_date")


@dataclass(frozen=True)
class Entry:
    id: int
    author_id: int
    date: date
    text: str
    source_url: str | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"entry {self.id}: text is empty")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    type: str
    description: str


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[ColumnSchema, ...]
    relations: tuple[str, ...] = ()


@dataclass(frozen=True)
class SchemaDescription:
    tables: tuple[TableSchema, ...]

    @property
    def table_columns(self) -> dict[str, frozenset[str]]:
        return {t.name: frozenset(c.name for c in t.columns) for t in self.tables}

    def render(self) -> str:
        """Deterministic text block for prompt embedding."""
        lines: list[str] = []
        for t in self.tables:
            lines.append(f"Table {t.name}:")
            for c in t.columns:
                lines.append(f"  - {c.name} ({c.type}): {c.description}")
        lines.append("Relations:")
        for t in self.tables:
            for r in t.relations:
                lines.append(f"  - {r}")
        return "\n".join(lines)


def _parse_date(value: str | None, *, where: str) -> date | None:
    if value in (None, ""):
        return None
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise ValueError(f"{where}: bad date {value!r}") from exc


def _author_from_record(rec: dict, line: int) -> Author:
    try:
        return Author(
            id=int(rec["id"]),
            name=str(rec["name"]),
            birth_date=_parse_date(rec.get("birth_date"), where="birth_date"),
            death_date=_parse_date(rec.get("death_date"), where="death_date"),
            bio=str(rec.get("bio") or ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"bad author record: {exc}", line=line) from exc


def _entry_from_record(rec: dict, line: int) -> Entry:
    try:
        d = _parse_date(rec.get("date"), where="date")
        if d is None:
            raise ValueError("missing date")
        url = rec.get("source_url")
        return Entry(
            id=int(rec["id"]),
            author_id=int(rec["author_id"]),
            date=d,
            text=str(rec["text"]),
            source_url=str(url) if url not in (None, "") else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"bad entry record: {exc}", line=line) from exc


def _read_stream(source: IO[bytes] | IO[str]) -> io.StringIO:
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data)


def parse_corpus(source: IO[bytes] | IO[str], format: str) -> tuple[list[Entry], list[Author]]:
    """Parse a corpus stream into validated records without touching the store.

    jsonl streams may mix author and entry records (the fixed field names make
    them unambiguous); a csv stream holds one record type, chosen by its
    header row. Any malformed record rejects the whole batch with its line
    number.
    """
    text = _read_stream(source)
    entries: list[Entry] = []
    authors: list[Author] = []
    if format == "jsonl":
        for line_no, raw in enumerate(text, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise IngestError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if not isinstance(rec, dict):
                raise IngestError("record is not an object", line=line_no)
            if "name" in rec:
                authors.append(_author_from_record(rec, line_no))
            elif "author_id" in rec:
                entries.append(_entry_from_record(rec, line_no))
            else:
                raise IngestError("record is neither an author nor an entry", line=line_no)
    elif format == "csv":
        reader = csv.reader(text)
        try:
            header = tuple(next(reader))
        except StopIteration:
            return [], []
        if header == AUTHOR_FIELDS:
            kind = "author"
        elif header == ENTRY_FIELDS:
            kind = "entry"
        else:
            raise IngestError(f"unrecognized csv header {header!r}", line=1)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"expected {len(header)} fields, got {len(row)}", line=line_no)
            rec = dict(zip(header, row))
            if kind == "author":
                authors.append(_author_from_record(rec, line_no))
            else:
                entries.append(_entry_from_record(rec, line_no))
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    return entries, authors


class KnowledgeBase:
    """SQLite-backed store of authors and entries.

    All public methods are safe to call from multiple threads; a re-entrant
    lock serializes access to the single connection.
    """

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.executescript(_SCHEMA_SQL)
        self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- ingestion ---------------------------------------------------------

    def ingest_corpus(self, source: IO[bytes] | IO[str], format: str = "jsonl") -> tuple[int, int]:
        """Load a corpus stream; returns (entries_loaded, authors_loaded).

        The batch is validated in full before any write: a malformed record or
        a dangling author_id rejects everything. Records upsert by id, so
        re-ingesting identical data is idempotent.
        """
        entries, authors = parse_corpus(source, format)
        return self.ingest_records(entries, authors)

    def ingest_records(self, entries: Sequence[Entry], authors: Sequence[Author]) -> tuple[int, int]:
        with self._lock:
            known = {row[0] for row in self._conn.execute("SELECT id FROM authors")}
            known.update(a.id for a in authors)
            for e in entries:
                if e.author_id not in known:
                    raise IngestError(f"entry {e.id} references unknown author_id {e.author_id}")
            with self._conn:
                self._conn.executemany(
                    "INSERT OR REPLACE INTO authors (id, name, birth_date, death_date, bio)"
                    " VALUES (?, ?, ?, ?, ?)",
                    [
                        (a.id, a.name, _iso(a.birth_date), _iso(a.death_date), a.bio)
                        for a in authors
                    ],
                )
                self._conn.executemany(
                    "INSERT OR REPLACE INTO entries (id, author_id, date, text, source_url)"
                    " VALUES (?, ?, ?, ?, ?)",
                    [(e.id, e.author_id, _iso(e.date), e.text, e.source_url) for e in entries],
                )
        return len(entries), len(authors)

    # -- lookups -----------------------------------------------------------

    def get_entry(self, entry_id: int) -> Entry:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, author_id, date, text, source_url FROM entries WHERE id = ?",
                (entry_id,),
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no entry with id {entry_id}")
        return Entry(row[0], row[1], date.fromisoformat(row[2]), row[3], row[4])

    def get_author(self, author_id: int) -> Author:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, name, birth_date, death_date, bio FROM authors WHERE id = ?",
                (author_id,),
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no author with id {author_id}")
        return Author(
            row[0],
            row[1],
            date.fromisoformat(row[2]) if row[2] else None,
            date.fromisoformat(row[3]) if row[3] else None,
            row[4],
        )

    def iter_entries(self) -> Iterable[Entry]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, author_id, date, text, source_url FROM entries ORDER BY id"
            ).fetchall()
        for row in rows:
            yield Entry(row[0], row[1], date.fromisoformat(row[2]), row[3], row[4])

    def iter_authors(self) -> Iterable[Author]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, name, birth_date, death_date, bio FROM authors ORDER BY id"
            ).fetchall()
        for row in rows:
            yield Author(
                row[0],
                row[1],
                date.fromisoformat(row[2]) if row[2] else None,
                date.fromisoformat(row[3]) if row[3] else None,
                row[4],
            )

    def entry_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM entries").fetchone()[0]

    def author_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM authors").fetchone()[0]

    # -- SQL execution -----------------------------------------------------

    def execute_select(self, sql) -> tuple[list[str], list[tuple]]:
        """Run a guard-accepted SELECT; returns (column names, rows).

        Only `sqlbridge.SqlQuery` values with an accepted verdict are allowed;
        raw strings are refused before touching the engine. The connection is
        put in query_only mode for the duration so even an engine surprise
        cannot write.
        """
        # Imported here to keep kb importable without the parser module.
        from .sqlbridge import SqlQuery

        if not isinstance(sql, SqlQuery):
            raise TypeError("execute_select requires a validated SqlQuery, not raw text")
        if not sql.verdict.accepted:
            raise ValueError(f"refusing rejected SQL ({sql.verdict.reason}): {sql.verdict.detail}")
        with self._lock:
            self._conn.execute("PRAGMA query_only = ON")
            try:
                cur = self._conn.execute(sql.text)
                columns = [d[0] for d in cur.description] if cur.description else []
                rows = [tuple(r) for r in cur.fetchall()]
            except sqlite3.Error as exc:
                raise ExecutionFailedError(str(exc)) from exc
            finally:
                self._conn.execute("PRAGMA query_only = OFF")
        return columns, rows

    # -- schema ------------------------------------------------------------

    def schema_description(self) -> SchemaDescription:
        tables = []
        for name in ("authors", "entries"):
            cols = tuple(
                ColumnSchema(col, typ, doc)
                for (tbl, col), (typ, doc) in _COLUMN_DOCS.items()
                if tbl == name
            )
            relations = _RELATIONS if name == "entries" else ()
            tables.append(TableSchema(name, cols, relations))
        return SchemaDescription(tuple(tables))

    def render_schema_description(self) -> str:
        return self.schema_description().render()

    def live_table_columns(self) -> dict[str, set[str]]:
        """Actual tables/columns as SQLite reports them (round-trip checks)."""
        out: dict[str, set[str]] = {}
        with self._lock:
            names = [
                r[0]
                for r in self._conn.execute(
                    "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%'"
                )
            ]
            for name in names:
                cols = {r[1] for r in self._conn.execute(f"PRAGMA table_info({name})")}
                out[name] = cols
        return out

    def content_hash(self) -> str:
        """SHA-256 over all rows in deterministic order; read-only witnesses."""
        h = hashlib.sha256()
        with self._lock:
            for table in ("authors", "entries"):
                for row in self._conn.execute(f"SELECT * FROM {table} ORDER BY id"):
                    h.update(json.dumps(row, ensure_ascii=False).encode("utf-8"))
        return h.hexdigest()


def _iso(d: date | None) -> str | None:
    return d.isoformat() if d is not None else None
