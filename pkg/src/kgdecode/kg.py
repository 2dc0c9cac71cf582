"""Immutable in-memory knowledge graph with connectivity indices.

The two hash indices (entity to outgoing relations, relation to tail
entities) are built eagerly so that connectivity lookups during decoding
are dictionary hits, never scans. A third index keyed by (head, relation)
backs the optional stricter tail pruning mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class GraphError(ValueError):
    """Raised for malformed triples or namespace violations."""


class Triple(NamedTuple):
    head: str
    relation: str
    tail: str


_EMPTY: frozenset[str] = frozenset()


@dataclass(frozen=True)
class KnowledgeGraph:
    entities: frozenset[str]
    relations: frozenset[str]
    triples: frozenset[Triple]
    out_relations: dict[str, frozenset[str]] = field(compare=False)
    relation_tails: dict[str, frozenset[str]] = field(compare=False)
    pair_tails: dict[tuple[str, str], frozenset[str]] = field(compare=False)

    def __len__(self) -> int:
        return len(self.triples)


def build_graph(triples: Iterable[Triple | tuple[str, str, str]]) -> KnowledgeGraph:
    """Build a graph from (head, relation, tail) triples.

    Duplicates are deduplicated; the result is independent of input order.
    Raises :class:`GraphError` on empty components or when a key is used
    both as an entity and as a relation.
    """
    tripleset: set[Triple] = set()
    for raw in triples:
        t = Triple(*raw)
        if not t.head or not t.relation or not t.tail:
            raise GraphError(f"triple has an empty component: {t!r}")
        tripleset.add(t)

    entities: set[str] = set()
    relations: set[str] = set()
    out_rel: dict[str, set[str]] = {}
    rel_tails: dict[str, set[str]] = {}
    pair_tails: dict[tuple[str, str], set[str]] = {}
    for h, r, t in tripleset:
        entities.add(h)
        entities.add(t)
        relations.add(r)
        out_rel.setdefault(h, set()).add(r)
        rel_tails.setdefault(r, set()).add(t)
        pair_tails.setdefault((h, r), set()).add(t)

    overlap = entities & relations
    if overlap:
        raise GraphError(f"keys used as both entity and relation: {sorted(overlap)[:5]}")

    return KnowledgeGraph(
        entities=frozenset(entities),
        relations=frozenset(relations),
        triples=frozenset(tripleset),
        out_relations={e: frozenset(v) for e, v in out_rel.items()},
        relation_tails={r: frozenset(v) for r, v in rel_tails.items()},
        pair_tails={k: frozenset(v) for k, v in pair_tails.items()},
    )


def outgoing_relations(g: KnowledgeGraph, entity: str) -> frozenset[str]:
    """Relations with at least one triple headed by ``entity``; empty if unknown."""
    return g.out_relations.get(entity, _EMPTY)


def tail_entities(g: KnowledgeGraph, relation: str) -> frozenset[str]:
    """Entities appearing as tail of some triple with ``relation``; empty if unknown."""
    return g.relation_tails.get(relation, _EMPTY)


def pair_tail_entities(g: KnowledgeGraph, head: str, relation: str) -> frozenset[str]:
    """Tails of triples with this exact (head, relation) pair. Strict-mode lookup."""
    return g.pair_tails.get((head, relation), _EMPTY)


def contains_triple(g: KnowledgeGraph, head: str, relation: str, tail: str) -> bool:
    return Triple(head, relation, tail) in g.triples


def load_triples_file(path: str) -> list[Triple]:
    """Read a tab-separated triples file; '#' lines are comments.

    Raises :class:`GraphError` naming the line number on malformed input.
    """
    out: list[Triple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not all(f.strip() for f in fields):
                raise GraphError(f"{path}:{lineno}: expected 'head<TAB>relation<TAB>tail'")
            out.append(Triple(fields[0].strip(), fields[1].strip(), fields[2].strip()))
    return out


def write_triples_file(path: str, triples: Iterable[Triple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(f"{t.head}\t{t.relation}\t{t.tail}\n")
