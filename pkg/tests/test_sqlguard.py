"""SELECT-only guard: grammar coverage plus the shipped fuzz corpora."""

from pathlib import Path

import pytest

from archivist.sqlguard import (
    REASON_FORBIDDEN,
    REASON_NOT_SELECT,
    REASON_NOT_SINGLE,
    REASON_PARSE_ERROR,
    REASON_UNKNOWN_IDENT,
    validate_select_only,
)

DATA_DIR = Path(__file__).parent / "data" / "sql-guard"

SCHEMA = {
    "authors": frozenset({"id", "name", "birth_date", "death_date", "bio"}),
    "entries": frozenset({"id", "author_id", "date", "text", "source_url"}),
}


def load_corpus(name: str) -> list[str]:
    lines = (DATA_DIR / name).read_text(encoding="utf-8").splitlines()
    # Literal \n in a line stands for a real newline inside one input.
    return [line.replace("\\n", "\n") for line in lines if line.strip()]


def verdict(sql: str):
    return validate_select_only(sql, SCHEMA)


class TestSpecifiedExamples:
    def test_plain_date_filter_accepted(self):
        v = verdict("SELECT id FROM entries WHERE date < '1905-01-01'")
        assert v.accepted
        assert v.referenced_tables == {"entries"}
        assert "entries.id" in v.referenced_columns
        assert "entries.date" in v.referenced_columns

    def test_drop_rejected_as_not_select(self):
        v = verdict("DROP TABLE entries")
        assert not v.accepted and v.reason == REASON_NOT_SELECT

    def test_stacked_statements_rejected(self):
        v = verdict("SELECT id FROM entries; DELETE FROM entries")
        assert not v.accepted and v.reason == REASON_NOT_SINGLE


class TestReasons:
    def test_comment_is_forbidden_construct(self):
        assert verdict("SELECT id FROM entries -- x").reason == REASON_FORBIDDEN

    def test_union_is_forbidden_construct(self):
        v = verdict("SELECT id FROM entries UNION SELECT id FROM authors")
        assert v.reason == REASON_FORBIDDEN

    def test_unknown_table(self):
        v = verdict("SELECT id FROM missing")
        assert v.reason == REASON_UNKNOWN_IDENT and "missing" in v.detail

    def test_unknown_column(self):
        v = verdict("SELECT nothing FROM entries")
        assert v.reason == REASON_UNKNOWN_IDENT

    def test_unknown_qualified_column(self):
        v = verdict("SELECT e.nothing FROM entries e")
        assert v.reason == REASON_UNKNOWN_IDENT

    def test_unknown_alias(self):
        v = verdict("SELECT x.id FROM entries e")
        assert v.reason == REASON_UNKNOWN_IDENT

    def test_empty_input(self):
        assert verdict("").reason == REASON_PARSE_ERROR

    def test_garbage(self):
        assert verdict("@#$%").reason == REASON_PARSE_ERROR

    def test_subquery_outside_where_forbidden(self):
        v = verdict("SELECT (SELECT max(id) FROM entries) FROM authors")
        assert v.reason == REASON_FORBIDDEN

    def test_disallowed_function(self):
        v = verdict("SELECT load_extension('x') FROM entries")
        assert v.reason == REASON_FORBIDDEN

    def test_rejection_is_a_verdict_not_an_exception(self):
        for sql in ("", "DROP TABLE entries", "SELECT ' unterminated FROM entries"):
            v = verdict(sql)
            assert not v.accepted and v.reason


class TestVerdictInvariants:
    def test_accepted_means_no_reason_and_known_identifiers(self):
        for sql in load_corpus("valid.sql"):
            v = verdict(sql)
            assert v.accepted, f"{sql!r}: {v.reason} {v.detail}"
            assert v.reason is None and v.detail == ""
            assert v.referenced_tables <= set(SCHEMA)
            for col in v.referenced_columns:
                table, name = col.split(".")
                assert name in SCHEMA[table]

    def test_join_collects_both_tables(self):
        v = verdict(
            "SELECT e.id FROM entries e JOIN authors a ON e.author_id = a.id"
        )
        assert v.referenced_tables == {"entries", "authors"}


class TestFuzzCorpora:
    def test_no_adversarial_statement_accepted(self):
        statements = load_corpus("adversarial.sql")
        assert len(statements) >= 50
        accepted = [s for s in statements if verdict(s).accepted]
        assert accepted == []

    def test_every_valid_statement_accepted(self):
        statements = load_corpus("valid.sql")
        assert len(statements) >= 20
        rejected = [(s, verdict(s)) for s in statements if not verdict(s).accepted]
        assert rejected == [], rejected[:3]

    def test_adversarial_rejections_are_structured(self):
        known = {
            REASON_NOT_SELECT,
            REASON_NOT_SINGLE,
            REASON_FORBIDDEN,
            REASON_UNKNOWN_IDENT,
            REASON_PARSE_ERROR,
        }
        for sql in load_corpus("adversarial.sql"):
            v = verdict(sql)
            assert v.reason in known
            assert v.detail
