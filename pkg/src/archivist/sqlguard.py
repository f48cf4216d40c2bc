"""SELECT-only SQL validation via a real parser, not keyword blacklisting.

The accepted language is the subset documented in docs/sql-subset.ebnf: one
SELECT statement with optional DISTINCT, column list or *, FROM with
INNER/LEFT joins, WHERE with boolean/comparison/LIKE/IN/BETWEEN/IS NULL,
GROUP BY, HAVING, ORDER BY, LIMIT/OFFSET, and scalar subqueries inside
WHERE/HAVING. Everything else — stacked statements, comments, DDL/DML,
set operations, unknown functions, identifiers missing from the schema —
is rejected with a structured verdict. Rejection is a value, never an
exception.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

REASON_NOT_SINGLE = "not_single_statement"
REASON_NOT_SELECT = "not_select"
REASON_FORBIDDEN = "forbidden_construct"
REASON_UNKNOWN_IDENT = "unknown_identifier"
REASON_PARSE_ERROR = "parse_error"

# Keywords that belong to the accepted grammar.
_GRAMMAR_KEYWORDS = {
    "select", "distinct", "from", "as", "inner", "left", "outer", "join", "on",
    "where", "group", "by", "having", "order", "asc", "desc", "limit", "offset",
    "and", "or", "not", "like", "in", "between", "is", "null",
}

# Statement-head keywords of write/DDL/control statements: seeing one of these
# where a statement must start means "this is not a SELECT".
_NON_SELECT_HEADS = {
    "insert", "update", "delete", "drop", "create", "alter", "truncate",
    "replace", "pragma", "attach", "detach", "vacuum", "reindex", "grant",
    "revoke", "begin", "commit", "rollback", "with", "explain", "analyze",
    "exec", "execute", "call", "merge", "set", "copy", "load",
}

# SQL constructs that exist in the wider language but not in this subset;
# they fail with forbidden_construct rather than a generic parse error.
_OUTSIDE_SUBSET = {
    "union", "intersect", "except", "into", "returning", "case", "window",
    "over", "natural", "cross", "right", "full", "using", "glob", "regexp",
    "match", "cast", "exists", "values", "indexed", "collate",
}

# Words that can never be an implicit alias or bare identifier.
_RESERVED = _GRAMMAR_KEYWORDS | _NON_SELECT_HEADS | _OUTSIDE_SUBSET

# Read-only scalar/aggregate functions the subset admits.
ALLOWED_FUNCTIONS = {
    "count", "sum", "avg", "min", "max", "abs", "round", "length", "lower",
    "upper", "substr", "trim", "coalesce", "date", "strftime",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>--)
  | (?P<block_comment>/\*)
  | (?P<string>'(?:[^']|'')*')
  | (?P<unterminated_string>')
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|<>|!=|=|<|>|\|\||[+\-*/%])
  | (?P<punct>[(),.;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class GuardVerdict:
    """Structured accept/reject decision for one SQL string."""

    accepted: bool
    reason: str | None = None
    detail: str = ""
    referenced_tables: frozenset[str] = frozenset()
    referenced_columns: frozenset[str] = frozenset()

    @classmethod
    def rejection(cls, reason: str, detail: str) -> "GuardVerdict":
        return cls(accepted=False, reason=reason, detail=detail)


@dataclass(frozen=True)
class _Token:
    kind: str  # string | number | ident | op | punct | eof
    value: str
    pos: int


class _Reject(Exception):
    def __init__(self, reason: str, detail: str):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail


def _tokenize(sql: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(sql):
        m = _TOKEN_RE.match(sql, pos)
        if m is None:
            raise _Reject(REASON_PARSE_ERROR, f"unexpected character {sql[pos]!r} at {pos}")
        kind = m.lastgroup
        if kind == "ws":
            pos = m.end()
            continue
        if kind in ("line_comment", "block_comment"):
            raise _Reject(REASON_FORBIDDEN, "SQL comments are not allowed")
        if kind == "unterminated_string":
            raise _Reject(REASON_PARSE_ERROR, f"unterminated string literal at {pos}")
        if kind == "op" and m.group() == "||":
            raise _Reject(REASON_FORBIDDEN, "string concatenation is not in the subset")
        tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(sql)))
    return tokens


class _Parser:
    """Recursive-descent parser over the documented subset grammar."""

    def __init__(self, tokens: list[_Token], schema: Mapping[str, frozenset[str]]):
        self.tokens = tokens
        self.i = 0
        self.schema = {t.lower(): frozenset(c.lower() for c in cols) for t, cols in schema.items()}
        self.tables_used: set[str] = set()
        self.columns_used: set[str] = set()
        # alias (or table name) -> table name, per active select scope
        self.scopes: list[dict[str, str]] = []
        self.select_aliases: list[set[str]] = []

    # -- token helpers -------------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value.lower() in words

    def eat_keyword(self, *words: str) -> bool:
        if self.at_keyword(*words):
            self.advance()
            return True
        return False

    def expect_keyword(self, word: str) -> None:
        if not self.eat_keyword(word):
            self._fail(f"expected {word.upper()}")

    def expect_punct(self, value: str) -> None:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == value:
            self.advance()
            return
        self._fail(f"expected {value!r}")

    def _fail(self, message: str) -> None:
        tok = self.peek()
        found = tok.value or "end of input"
        if tok.kind == "ident":
            word = tok.value.lower()
            if word in _NON_SELECT_HEADS or word in _OUTSIDE_SUBSET:
                raise _Reject(REASON_FORBIDDEN, f"{message}, found {found!r} (outside the subset)")
        raise _Reject(REASON_PARSE_ERROR, f"{message}, found {found!r}")

    # -- grammar -------------------------------------------------------------

    def parse_statement(self) -> None:
        tok = self.peek()
        if tok.kind == "eof":
            raise _Reject(REASON_PARSE_ERROR, "empty input")
        if tok.kind == "ident" and tok.value.lower() in _NON_SELECT_HEADS:
            raise _Reject(REASON_NOT_SELECT, f"statement head {tok.value.upper()!r} is not SELECT")
        if not self.at_keyword("select"):
            raise _Reject(REASON_NOT_SELECT, f"statement does not start with SELECT ({tok.value!r})")
        self.parse_select()
        tok = self.peek()
        if tok.kind == "punct" and tok.value == ";":
            self.advance()
            if self.peek().kind != "eof":
                raise _Reject(REASON_NOT_SINGLE, "multiple statements")
        if self.peek().kind != "eof":
            self._fail("expected end of statement")

    def parse_select(self) -> None:
        self.expect_keyword("select")
        self.scopes.append({})
        self.select_aliases.append(set())
        self.eat_keyword("distinct")

        deferred_items: list[int] = []
        star = False
        if self.peek().kind == "op" and self.peek().value == "*":
            self.advance()
            star = True
        else:
            # The FROM clause defines which identifiers are legal, so remember
            # the select list's token span and validate it after FROM is read.
            deferred_items.append(self.i)
            self._skip_select_list()

        self.expect_keyword("from")
        self.parse_table_ref()
        while True:
            if self.eat_keyword("inner"):
                self.expect_keyword("join")
            elif self.at_keyword("left"):
                self.advance()
                self.eat_keyword("outer")
                self.expect_keyword("join")
            elif self.at_keyword("join"):
                self.advance()
            else:
                break
            self.parse_table_ref()
            self.expect_keyword("on")
            self.parse_expr(allow_subquery=False)

        if star:
            scope = self.scopes[-1]
            for table in scope.values():
                for col in self.schema[table]:
                    self.columns_used.add(f"{table}.{col}")
        for mark in deferred_items:
            end = self.i
            self.i = mark
            self.parse_select_list()
            self.i = end

        if self.eat_keyword("where"):
            self.parse_expr(allow_subquery=True)
        if self.at_keyword("group"):
            self.advance()
            self.expect_keyword("by")
            self.parse_expr(allow_subquery=False)
            while self.peek().kind == "punct" and self.peek().value == ",":
                self.advance()
                self.parse_expr(allow_subquery=False)
        if self.eat_keyword("having"):
            self.parse_expr(allow_subquery=True)
        if self.at_keyword("order"):
            self.advance()
            self.expect_keyword("by")
            self.parse_order_item()
            while self.peek().kind == "punct" and self.peek().value == ",":
                self.advance()
                self.parse_order_item()
        if self.eat_keyword("limit"):
            self.parse_integer()
            if self.eat_keyword("offset"):
                self.parse_integer()

        self.scopes.pop()
        self.select_aliases.pop()

    def _skip_select_list(self) -> None:
        """Advance past the select list without validating identifiers."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                self._fail("expected FROM")
            if tok.kind == "punct":
                if tok.value == "(":
                    depth += 1
                elif tok.value == ")":
                    depth -= 1
                    if depth < 0:
                        self._fail("unbalanced parentheses")
                elif tok.value == ";":
                    self._fail("expected FROM")
            if depth == 0 and tok.kind == "ident" and tok.value.lower() == "from":
                return
            self.advance()

    def parse_select_list(self) -> None:
        self.parse_select_item()
        while self.peek().kind == "punct" and self.peek().value == ",":
            self.advance()
            self.parse_select_item()

    def parse_select_item(self) -> None:
        self.parse_expr(allow_subquery=False)
        if self.eat_keyword("as"):
            alias = self.expect_ident("alias")
            self.select_aliases[-1].add(alias.lower())
        elif self.peek().kind == "ident" and self.peek().value.lower() not in _RESERVED:
            alias = self.advance().value
            self.select_aliases[-1].add(alias.lower())

    def parse_table_ref(self) -> None:
        name_tok = self.peek()
        name = self.expect_ident("table name").lower()
        if name not in self.schema:
            raise _Reject(REASON_UNKNOWN_IDENT, f"unknown table {name_tok.value!r}")
        self.tables_used.add(name)
        alias = name
        if self.eat_keyword("as"):
            alias = self.expect_ident("table alias").lower()
        elif self.peek().kind == "ident" and self.peek().value.lower() not in _RESERVED:
            alias = self.advance().value.lower()
        self.scopes[-1][alias] = name

    def parse_order_item(self) -> None:
        self.parse_expr(allow_subquery=False)
        if not self.eat_keyword("asc"):
            self.eat_keyword("desc")

    def parse_integer(self) -> None:
        tok = self.peek()
        if tok.kind != "number" or not tok.value.isdigit():
            self._fail("expected integer")
        self.advance()

    def expect_ident(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "ident" or tok.value.lower() in _RESERVED:
            self._fail(f"expected {what}")
        return self.advance().value

    # -- expressions ----------------------------------------------------------

    def parse_expr(self, allow_subquery: bool) -> None:
        self.parse_and(allow_subquery)
        while self.eat_keyword("or"):
            self.parse_and(allow_subquery)

    def parse_and(self, allow_subquery: bool) -> None:
        self.parse_not(allow_subquery)
        while self.eat_keyword("and"):
            self.parse_not(allow_subquery)

    def parse_not(self, allow_subquery: bool) -> None:
        if self.eat_keyword("not"):
            self.parse_not(allow_subquery)
            return
        self.parse_comparison(allow_subquery)

    def parse_comparison(self, allow_subquery: bool) -> None:
        self.parse_additive(allow_subquery)
        tok = self.peek()
        if tok.kind == "op" and tok.value in ("=", "!=", "<>", "<", "<=", ">", ">="):
            self.advance()
            self.parse_additive(allow_subquery)
            return
        negated = False
        if self.at_keyword("not"):
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "ident" and nxt.value.lower() in ("like", "in", "between"):
                self.advance()
                negated = True
        if self.eat_keyword("like"):
            self.parse_additive(allow_subquery)
        elif self.eat_keyword("in"):
            self.expect_punct("(")
            if self.at_keyword("select"):
                if not allow_subquery:
                    raise _Reject(REASON_FORBIDDEN, "subquery only allowed inside WHERE/HAVING")
                self.parse_select()
            else:
                self.parse_additive(allow_subquery)
                while self.peek().kind == "punct" and self.peek().value == ",":
                    self.advance()
                    self.parse_additive(allow_subquery)
            self.expect_punct(")")
        elif self.eat_keyword("between"):
            self.parse_additive(allow_subquery)
            self.expect_keyword("and")
            self.parse_additive(allow_subquery)
        elif self.eat_keyword("is"):
            self.eat_keyword("not")
            if not self.eat_keyword("null"):
                self._fail("expected NULL after IS")
        elif negated:
            self._fail("expected LIKE, IN or BETWEEN after NOT")

    def parse_additive(self, allow_subquery: bool) -> None:
        self.parse_term(allow_subquery)
        while self.peek().kind == "op" and self.peek().value in ("+", "-"):
            self.advance()
            self.parse_term(allow_subquery)

    def parse_term(self, allow_subquery: bool) -> None:
        self.parse_factor(allow_subquery)
        while self.peek().kind == "op" and self.peek().value in ("*", "/", "%"):
            # '*' here is multiplication; the select-list star never reaches
            # this point because it is consumed in parse_select.
            self.advance()
            self.parse_factor(allow_subquery)

    def parse_factor(self, allow_subquery: bool) -> None:
        tok = self.peek()
        if tok.kind in ("string", "number"):
            self.advance()
            return
        if tok.kind == "op" and tok.value == "-":
            self.advance()
            self.parse_factor(allow_subquery)
            return
        if tok.kind == "punct" and tok.value == "(":
            self.advance()
            if self.at_keyword("select"):
                if not allow_subquery:
                    raise _Reject(REASON_FORBIDDEN, "subquery only allowed inside WHERE/HAVING")
                self.parse_select()
            else:
                self.parse_expr(allow_subquery)
            self.expect_punct(")")
            return
        if tok.kind == "ident":
            word = tok.value.lower()
            if word == "null":
                self.advance()
                return
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "punct" and nxt.value == "(":
                self.parse_function_call(allow_subquery)
                return
            if word in _GRAMMAR_KEYWORDS:
                self._fail("expected a value expression")
            self.parse_column_ref()
            return
        self._fail("expected a value expression")

    def parse_function_call(self, allow_subquery: bool) -> None:
        name_tok = self.advance()
        name = name_tok.value.lower()
        if name not in ALLOWED_FUNCTIONS:
            raise _Reject(REASON_FORBIDDEN, f"function {name_tok.value!r} is not allowed")
        self.expect_punct("(")
        self.eat_keyword("distinct")
        if self.peek().kind == "op" and self.peek().value == "*":
            if name != "count":
                raise _Reject(REASON_FORBIDDEN, "'*' argument only allowed for COUNT")
            self.advance()
        elif not (self.peek().kind == "punct" and self.peek().value == ")"):
            self.parse_expr(allow_subquery=False)
            while self.peek().kind == "punct" and self.peek().value == ",":
                self.advance()
                self.parse_expr(allow_subquery=False)
        self.expect_punct(")")

    def parse_column_ref(self) -> None:
        first_tok = self.peek()
        first = self.expect_ident("column name")
        if self.peek().kind == "punct" and self.peek().value == ".":
            self.advance()
            col_tok = self.peek()
            col = self.expect_ident("column name").lower()
            table = self._resolve_scope_name(first.lower())
            if table is None:
                raise _Reject(REASON_UNKNOWN_IDENT, f"unknown table or alias {first!r}")
            if col not in self.schema[table]:
                raise _Reject(
                    REASON_UNKNOWN_IDENT, f"table {table!r} has no column {col_tok.value!r}"
                )
            self.columns_used.add(f"{table}.{col}")
            return
        name = first.lower()
        owners = [
            table
            for table in self._visible_tables()
            if name in self.schema[table]
        ]
        if owners:
            for table in owners:
                self.columns_used.add(f"{table}.{name}")
            return
        if any(name in aliases for aliases in self.select_aliases):
            return
        raise _Reject(REASON_UNKNOWN_IDENT, f"unknown column {first!r}")

    def _resolve_scope_name(self, name: str) -> str | None:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def _visible_tables(self) -> list[str]:
        seen: list[str] = []
        for scope in self.scopes:
            for table in scope.values():
                if table not in seen:
                    seen.append(table)
        return seen


def validate_select_only(sql: str, schema: Mapping[str, frozenset[str]]) -> GuardVerdict:
    """Parse ``sql`` against the subset grammar and the live schema.

    ``schema`` maps table name -> column name set (see
    KnowledgeBase.schema_description().table_columns).
    """
    try:
        tokens = _tokenize(sql)
        parser = _Parser(tokens, schema)
        parser.parse_statement()
    except _Reject as rej:
        return GuardVerdict.rejection(rej.reason, rej.detail)
    return GuardVerdict(
        accepted=True,
        reason=None,
        detail="",
        referenced_tables=frozenset(parser.tables_used),
        referenced_columns=frozenset(parser.columns_used),
    )
