"""Parse generated queries and evaluate them against the graph.

The parser is a hand-written recursive-descent mirror of the generation
template and is deliberately independent of the grammar state machine, so
the two act as checks on each other. Execution is conjunctive
triple-pattern matching with set semantics; a query referencing unknown
identifiers parses fine and simply matches nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .identifiers import IdentifierTable
from .kg import KnowledgeGraph, outgoing_relations, tail_entities

_VAR_RE = re.compile(r"^\?var[0-9]$")


class ParseError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"at piece {position}: {message}")
        self.position = position
        self.message = message


@dataclass(frozen=True)
class VarTerm:
    name: str


@dataclass(frozen=True)
class EntityTerm:
    key: str | None
    surface: str


@dataclass(frozen=True)
class RelationTerm:
    key: str | None
    surface: str


Term = Union[VarTerm, EntityTerm, RelationTerm]


@dataclass(frozen=True)
class QueryAst:
    form: str  # "SELECT" | "ASK"
    distinct: bool
    count: bool
    projection: str | None
    patterns: tuple[tuple[Term, Term, Term], ...]


@dataclass(frozen=True)
class ResultSet:
    kind: str  # "boolean" | "entities" | "count"
    value: bool | frozenset[str] | int

    def is_empty(self) -> bool:
        """A boolean is always an answer; a zero count or empty set is not."""
        if self.kind == "boolean":
            return False
        if self.kind == "count":
            return self.value == 0
        return len(self.value) == 0

    def answer_set(self) -> frozenset[str]:
        """Canonical string form used for metric comparison."""
        if self.kind == "boolean":
            return frozenset({"true" if self.value else "false"})
        if self.kind == "count":
            return frozenset({str(self.value)})
        return frozenset(self.value)


class _Pieces:
    def __init__(self, text: str):
        self.pieces = text.split()
        self.pos = 0

    def peek(self) -> str | None:
        return self.pieces[self.pos] if self.pos < len(self.pieces) else None

    def take(self, expected: str | None = None) -> str:
        if self.pos >= len(self.pieces):
            raise ParseError(self.pos, f"unexpected end of query (wanted {expected or 'more'})")
        piece = self.pieces[self.pos]
        if expected is not None and piece != expected:
            raise ParseError(self.pos, f"expected {expected!r}, found {piece!r}")
        self.pos += 1
        return piece


def parse_query(
    query: str,
    entity_table: IdentifierTable,
    relation_table: IdentifierTable,
) -> QueryAst:
    """Parse template-conforming query text into an AST.

    Raises :class:`ParseError` with the failing piece position otherwise;
    this is how an inexecutable candidate is detected.
    """
    ps = _Pieces(query)
    form = ps.take()
    if form not in ("SELECT", "ASK"):
        raise ParseError(0, f"query must start with SELECT or ASK, found {form!r}")

    distinct = False
    count = False
    projection: str | None = None
    if form == "SELECT":
        if ps.peek() == "DISTINCT":
            ps.take()
            distinct = True
        if ps.peek() == "COUNT":
            ps.take()
            count = True
            ps.take("(")
            projection = _take_variable(ps)
            ps.take(")")
        else:
            projection = _take_variable(ps)
        ps.take("WHERE")
    ps.take("{")

    patterns: list[tuple[Term, Term, Term]] = []
    while ps.peek() != "}":
        if ps.peek() is None:
            raise ParseError(ps.pos, "unterminated pattern block")
        head = _take_term(ps, entity_table, relation=False)
        rel = _take_term(ps, relation_table, relation=True)
        tail = _take_term(ps, entity_table, relation=False)
        ps.take(".")
        patterns.append((head, rel, tail))
    ps.take("}")
    if ps.peek() is not None:
        raise ParseError(ps.pos, f"trailing content after '}}': {ps.peek()!r}")

    if not patterns:
        raise ParseError(ps.pos, "empty pattern block")
    if form == "SELECT":
        used = {t.name for p in patterns for t in p if isinstance(t, VarTerm)}
        if projection not in used:
            raise ParseError(ps.pos, f"projection variable {projection} unused in patterns")

    return QueryAst(
        form=form,
        distinct=distinct,
        count=count,
        projection=projection,
        patterns=tuple(patterns),
    )


def _take_variable(ps: _Pieces) -> str:
    pos = ps.pos
    piece = ps.take()
    if not _VAR_RE.match(piece):
        raise ParseError(pos, f"expected a variable ?var0..?var9, found {piece!r}")
    return piece


def _take_term(ps: _Pieces, table: IdentifierTable, relation: bool) -> Term:
    pos = ps.pos
    piece = ps.take()
    if piece == "[":
        body: list[str] = []
        while ps.peek() != "]":
            if ps.peek() is None:
                raise ParseError(ps.pos, "unterminated identifier")
            body.append(ps.take())
        ps.take("]")
        if not body:
            raise ParseError(pos, "empty identifier")
        surface = f"[ {' '.join(body)} ]"
        key = table.key_of(surface)
        return RelationTerm(key, surface) if relation else EntityTerm(key, surface)
    if _VAR_RE.match(piece):
        if relation:
            raise ParseError(pos, "variables are not allowed in the relation position")
        return VarTerm(piece)
    raise ParseError(pos, f"expected an identifier or variable, found {piece!r}")


def execute(ast: QueryAst, g: KnowledgeGraph) -> ResultSet:
    """Conjunctive pattern matching with natural-join semantics.

    Patterns are evaluated left to right with binding propagation, which
    is equivalent to enumerating all variable assignments. Unknown
    concrete identifiers match nothing. A variable repeated within one
    pattern must take the same value on both occurrences.
    """
    bindings: list[dict[str, str]] = [{}]
    for pattern in ast.patterns:
        new_bindings: list[dict[str, str]] = []
        for b in bindings:
            for triple in g.triples:
                nb = _unify(pattern, b, triple)
                if nb is not None:
                    new_bindings.append(nb)
        bindings = new_bindings
        if not bindings:
            break

    if ast.form == "ASK":
        return ResultSet("boolean", bool(bindings))
    values = frozenset(b[ast.projection] for b in bindings)
    if ast.count:
        return ResultSet("count", len(values))
    return ResultSet("entities", values)


def _unify(
    pattern: tuple[Term, Term, Term], binding: dict[str, str], triple
) -> dict[str, str] | None:
    """Extend ``binding`` so the pattern matches the triple, or None."""
    nb: dict[str, str] | None = None
    for term, value in zip(pattern, triple):
        if isinstance(term, VarTerm):
            current = (nb or binding).get(term.name)
            if current is None:
                if nb is None:
                    nb = dict(binding)
                nb[term.name] = value
            elif current != value:
                return None
        elif term.key != value:  # None (unknown identifier) never matches
            return None
    return nb if nb is not None else binding


def connectivity_ok(ast: QueryAst, g: KnowledgeGraph) -> bool:
    """Pattern-wise connectivity validity of every triple pattern.

    A concrete (head, relation) must satisfy relation-in-outgoing(head);
    a concrete (relation, tail) must satisfy tail-reachable-via-relation.
    Unknown identifiers fail. Mirrors exactly what pruning enforces.
    """
    for head, rel, tail in ast.patterns:
        if isinstance(rel, RelationTerm):
            if rel.key is None or rel.key not in g.relations:
                return False
        if isinstance(head, EntityTerm):
            if head.key is None:
                return False
            if isinstance(rel, RelationTerm) and rel.key not in outgoing_relations(g, head.key):
                return False
        if isinstance(tail, EntityTerm):
            if tail.key is None:
                return False
            if isinstance(rel, RelationTerm) and tail.key not in tail_entities(g, rel.key):
                return False
    return True


def query_executable(
    query: str,
    g: KnowledgeGraph,
    entity_table: IdentifierTable,
    relation_table: IdentifierTable,
) -> bool:
    """Parses and is connectivity-valid; the definition of an executable query."""
    try:
        ast = parse_query(query, entity_table, relation_table)
    except ParseError:
        return False
    return connectivity_ok(ast, g)


def answer(result, bundle) -> tuple[ResultSet, int] | None:
    """Execute ranked queries in turn until one yields a non-empty result.

    Parse failures and empty results are skipped; a boolean (even false)
    is an answer. Returns the result with its 1-based rank, or None.
    """
    for rank, (query, _) in enumerate(result.ranked, start=1):
        try:
            ast = parse_query(query, bundle.entity_table, bundle.relation_table)
        except ParseError:
            continue
        res = execute(ast, bundle.graph)
        if not res.is_empty():
            return res, rank
    return None
