"""Knowledge-base: ingestion, lookups, read-only SQL execution, schema render."""

import io
import json
from datetime import date

import pytest

from archivist.errors import ExecutionFailedError, IngestError, NotFoundError
from archivist.kb import Author, ColumnSchema, Entry, KnowledgeBase, SchemaDescription, TableSchema
from archivist.sqlbridge import SqlQuery
from archivist.sqlguard import validate_select_only

from conftest import hand_authors, hand_entries


def jsonl_stream(records) -> io.StringIO:
    return io.StringIO("\n".join(json.dumps(r) for r in records))


AUTHOR_RECORDS = [
    {"id": 1, "name": "Anna", "birth_date": "1870-01-02", "bio": "a naturalist"},
    {"id": 2, "name": "Boris", "bio": ""},
]
ENTRY_RECORDS = [
    {"id": 1, "author_id": 1, "date": "1904-05-06", "text": "The storm lasted two days."},
    {"id": 2, "author_id": 2, "date": "1910-02-03", "text": "Bread rations were cut."},
    {"id": 3, "author_id": 1, "date": "1911-07-08", "text": "We sailed past the light."},
]


def make_query(kb: KnowledgeBase, sql: str) -> SqlQuery:
    cols = {t: frozenset(c) for t, c in kb.schema_description().table_columns.items()}
    verdict = validate_select_only(sql, cols)
    assert verdict.accepted, verdict.detail
    return SqlQuery(sql, origin="user", verdict=verdict)


class TestIngest:
    def test_counts(self):
        kb = KnowledgeBase()
        assert kb.ingest_corpus(jsonl_stream(AUTHOR_RECORDS + ENTRY_RECORDS)) == (3, 2)

    def test_dangling_author_rejects_batch(self):
        kb = KnowledgeBase()
        bad = ENTRY_RECORDS + [{"id": 9, "author_id": 77, "date": "1900-01-01", "text": "x"}]
        with pytest.raises(IngestError, match="77"):
            kb.ingest_corpus(jsonl_stream(AUTHOR_RECORDS + bad))
        assert kb.entry_count() == 0  # whole batch rejected

    def test_malformed_record_reports_line(self):
        kb = KnowledgeBase()
        stream = io.StringIO('{"id": 1, "name": "Anna"}\n{"nonsense": true}\n')
        with pytest.raises(IngestError, match="line 2"):
            kb.ingest_corpus(stream)

    def test_invalid_json_reports_line(self):
        with pytest.raises(IngestError, match="line 1"):
            KnowledgeBase().ingest_corpus(io.StringIO("{broken\n"))

    def test_bad_date_rejected(self):
        kb = KnowledgeBase()
        recs = AUTHOR_RECORDS + [
            {"id": 1, "author_id": 1, "date": "not-a-date", "text": "x"}
        ]
        with pytest.raises(IngestError, match="line 3"):
            kb.ingest_corpus(jsonl_stream(recs))

    def test_reingest_is_idempotent(self):
        kb = KnowledgeBase()
        kb.ingest_corpus(jsonl_stream(AUTHOR_RECORDS + ENTRY_RECORDS))
        before = kb.content_hash()
        kb.ingest_corpus(jsonl_stream(AUTHOR_RECORDS + ENTRY_RECORDS))
        assert kb.content_hash() == before
        assert (kb.entry_count(), kb.author_count()) == (3, 2)

    def test_byte_stream_accepted(self):
        kb = KnowledgeBase()
        data = "\n".join(json.dumps(r) for r in AUTHOR_RECORDS + ENTRY_RECORDS)
        assert kb.ingest_corpus(io.BytesIO(data.encode("utf-8"))) == (3, 2)

    def test_benchmark_corpus_counts(self, bench_data):
        entries, authors, _ = bench_data
        kb = KnowledgeBase()
        assert kb.ingest_records(entries, authors) == (125, 25)

    def test_csv_both_kinds(self):
        kb = KnowledgeBase()
        authors_csv = io.StringIO(
            "id,name,birth_date,death_date,bio\n"
            '1,Anna,1870-01-02,,a naturalist\n'
            "2,Boris,,,\n"
        )
        entries_csv = io.StringIO(
            "id,author_id,date,text,source_url\n"
            '1,1,1904-05-06,The storm lasted two days.,\n'
            "2,2,1910-02-03,Bread rations were cut.,https://x.test/2\n"
        )
        assert kb.ingest_corpus(authors_csv, format="csv") == (0, 2)
        assert kb.ingest_corpus(entries_csv, format="csv") == (2, 0)
        assert kb.get_entry(2).source_url == "https://x.test/2"

    def test_csv_unknown_header(self):
        with pytest.raises(IngestError, match="header"):
            KnowledgeBase().ingest_corpus(io.StringIO("a,b,c\n1,2,3\n"), format="csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="format"):
            KnowledgeBase().ingest_corpus(io.StringIO(""), format="xml")


class TestDomainTypes:
    def test_author_date_order_enforced(self):
        with pytest.raises(ValueError, match="birth_date"):
            Author(1, "X", date(1950, 1, 1), date(1900, 1, 1))

    def test_entry_text_nonempty(self):
        with pytest.raises(ValueError, match="empty"):
            Entry(1, 1, date(1900, 1, 1), "   ")


class TestLookups:
    def test_round_trip_preserves_fields(self):
        kb = KnowledgeBase()
        kb.ingest_records(hand_entries(), hand_authors())
        for original in hand_entries():
            assert kb.get_entry(original.id) == original
        for original in hand_authors():
            assert kb.get_author(original.id) == original

    def test_get_missing(self):
        kb = KnowledgeBase()
        kb.ingest_records(hand_entries(), hand_authors())
        with pytest.raises(NotFoundError):
            kb.get_entry(999)
        with pytest.raises(NotFoundError):
            kb.get_author(999)

    def test_all_ids_retrievable_after_ingest(self, bench_data):
        entries, authors, _ = bench_data
        kb = KnowledgeBase()
        kb.ingest_records(entries, authors)
        for e in entries:
            assert kb.get_entry(e.id).id == e.id


class TestExecuteSelect:
    def test_date_filter_hand_check(self):
        # Three entries, exactly one strictly before 1905-01-01.
        kb = KnowledgeBase()
        kb.ingest_records(
            [
                Entry(1, 1, date(1904, 12, 31), "before"),
                Entry(2, 1, date(1905, 1, 1), "on the boundary"),
                Entry(3, 1, date(1910, 6, 1), "after"),
            ],
            [Author(1, "A")],
        )
        cols, rows = kb.execute_select(
            make_query(kb, "SELECT id FROM entries WHERE date < '1905-01-01'")
        )
        assert cols == ["id"]
        assert rows == [(1,)]

    def test_empty_result_is_not_an_error(self, hand_stack):
        _, rows = hand_stack.kb.execute_select(
            make_query(hand_stack.kb, "SELECT id FROM entries WHERE date < '1800-01-01'")
        )
        assert rows == []

    def test_raw_text_refused(self, hand_stack):
        with pytest.raises(TypeError):
            hand_stack.kb.execute_select("SELECT id FROM entries")

    def test_rejected_verdict_refused(self, hand_stack):
        cols = {t: frozenset(c) for t, c in hand_stack.kb.schema_description().table_columns.items()}
        verdict = validate_select_only("DROP TABLE entries", cols)
        q = SqlQuery("DROP TABLE entries", origin="user", verdict=verdict)
        with pytest.raises(ValueError, match="rejected"):
            hand_stack.kb.execute_select(q)

    def test_read_only(self, hand_stack):
        before = hand_stack.kb.content_hash()
        hand_stack.kb.execute_select(make_query(hand_stack.kb, "SELECT * FROM entries"))
        assert hand_stack.kb.content_hash() == before

    def test_runtime_error_surfaces_engine_message(self, hand_stack):
        # Guard-valid but fails at runtime: abs() of a text column is fine in
        # SQLite, so use a division by zero instead.
        q = make_query(hand_stack.kb, "SELECT id FROM entries WHERE id / 0 = 1")
        try:
            _, rows = hand_stack.kb.execute_select(q)
        except ExecutionFailedError:
            pass  # engines may raise instead of returning NULL; both acceptable
        else:
            assert rows == []


class TestConcurrency:
    def test_many_concurrent_readers(self, hand_stack):
        from concurrent.futures import ThreadPoolExecutor

        kb = hand_stack.kb
        query = make_query(kb, "SELECT id FROM entries WHERE date < '1910-01-01'")

        def worker(i: int) -> int:
            entry = kb.get_entry(1 + (i % 6))
            _, rows = kb.execute_select(query)
            return entry.id + len(rows)

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(worker, range(200)))
        assert all(isinstance(r, int) for r in results)
        assert kb.entry_count() == 6


class TestSchemaDescription:
    def test_render_contains_tables_and_relation(self, hand_stack):
        text = hand_stack.kb.render_schema_description()
        assert "authors" in text and "entries" in text
        assert "entries.author_id -> authors.id" in text

    def test_render_deterministic(self, hand_stack):
        assert (
            hand_stack.kb.render_schema_description()
            == hand_stack.kb.render_schema_description()
        )

    def test_added_column_changes_exactly_one_line(self, hand_stack):
        schema = hand_stack.kb.schema_description()
        base = schema.render().splitlines()
        tables = list(schema.tables)
        extended = TableSchema(
            tables[0].name,
            tables[0].columns + (ColumnSchema("notes", "TEXT", "free-form notes"),),
            tables[0].relations,
        )
        changed = SchemaDescription((extended, *tables[1:])).render().splitlines()
        assert len(changed) == len(base) + 1
        added = set(changed) - set(base)
        assert len(added) == 1 and "notes" in next(iter(added))

    def test_round_trip_matches_live_store(self, hand_stack):
        declared = hand_stack.kb.schema_description().table_columns
        live = hand_stack.kb.live_table_columns()
        assert set(declared) == set(live)
        for table, cols in declared.items():
            assert set(cols) == live[table]
