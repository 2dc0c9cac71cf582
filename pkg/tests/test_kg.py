from __future__ import annotations

import random

import pytest

from kgdecode.kg import (
    GraphError,
    Triple,
    build_graph,
    contains_triple,
    load_triples_file,
    outgoing_relations,
    pair_tail_entities,
    tail_entities,
    write_triples_file,
)


# Brute-force oracles: definitions read straight off the triple list.
def scan_outgoing(triples, e):
    return {r for (h, r, t) in triples if h == e}


def scan_tails(triples, r):
    return {t for (h, rr, t) in triples if rr == r}


def test_empty_input_yields_empty_graph():
    g = build_graph([])
    assert len(g.entities) == 0
    assert len(g.relations) == 0
    assert len(g.triples) == 0


def test_single_triple_indices():
    g = build_graph([("Michael_Bay", "direct", "Transformers")])
    assert outgoing_relations(g, "Michael_Bay") == {"direct"}
    assert tail_entities(g, "direct") == {"Transformers"}


def test_film_fixture_write_not_outgoing(film_fixture):
    g = film_fixture.bundle.graph
    assert "write" in g.relations
    assert "write" not in outgoing_relations(g, "Michael_Bay")


def test_outgoing_relations_matches_scan_oracle():
    trips = [("A", "r1", "B"), ("A", "r2", "C")]
    g = build_graph(trips)
    assert outgoing_relations(g, "A") == {"r1", "r2"} == scan_outgoing(trips, "A")


def test_outgoing_relations_unknown_entity_empty():
    g = build_graph([("A", "r1", "B")])
    assert outgoing_relations(g, "ZZZ") == frozenset()


def test_tail_entities_matches_scan_oracle():
    trips = [("A", "r1", "B"), ("C", "r1", "D")]
    g = build_graph(trips)
    assert tail_entities(g, "r1") == {"B", "D"} == scan_tails(trips, "r1")
    g2 = build_graph([("A", "r1", "B")])
    assert tail_entities(g2, "r1") == {"B"}


def test_tail_entities_unknown_relation_empty():
    g = build_graph([("A", "r1", "B")])
    assert tail_entities(g, "nope") == frozenset()


def test_contains_triple_direction_matters():
    g = build_graph([("A", "r1", "B")])
    assert contains_triple(g, "A", "r1", "B")
    assert not contains_triple(g, "B", "r1", "A")


def test_film_fixture_no_write_triple_from_director(film_fixture):
    g = film_fixture.bundle.graph
    for t in ("Transformers", "Armageddon", "Academy_Awards"):
        assert not contains_triple(g, "Michael_Bay", "write", t)


def test_duplicates_deduplicated():
    g = build_graph([("A", "r1", "B")] * 5)
    assert len(g.triples) == 1


def test_empty_component_rejected():
    with pytest.raises(GraphError):
        build_graph([("A", "", "B")])


def test_entity_relation_namespace_disjoint():
    with pytest.raises(GraphError):
        build_graph([("A", "r1", "B"), ("r1", "r2", "C")])


def test_build_order_insensitive():
    trips = [(f"E{i}", f"r{i % 3}", f"E{(i * 7) % 11}") for i in range(30)]
    g1 = build_graph(trips)
    for seed in (1, 2, 3):
        shuffled = trips[:]
        random.Random(seed).shuffle(shuffled)
        g2 = build_graph(shuffled)
        assert g1 == g2
        assert g1.out_relations == g2.out_relations
        assert g1.relation_tails == g2.relation_tails


def test_indices_match_scan_on_random_graph():
    rng = random.Random(42)
    trips = [
        (f"E{rng.randrange(40)}", f"r{rng.randrange(6)}", f"E{rng.randrange(40)}")
        for _ in range(10_000)
    ]
    g = build_graph(trips)
    for e in sorted(g.entities):
        assert outgoing_relations(g, e) == scan_outgoing(trips, e)
    for r in sorted(g.relations):
        assert tail_entities(g, r) == scan_tails(trips, r)


def test_pair_tails_matches_scan():
    trips = [("A", "r1", "B"), ("A", "r1", "C"), ("D", "r1", "E")]
    g = build_graph(trips)
    assert pair_tail_entities(g, "A", "r1") == {"B", "C"}
    assert pair_tail_entities(g, "A", "r2") == frozenset()


def test_triples_file_roundtrip(tmp_path):
    path = str(tmp_path / "triples.tsv")
    trips = [Triple("A", "r1", "B"), Triple("C", "r2", "D")]
    write_triples_file(path, trips)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("# a comment line\n\n")
    assert load_triples_file(path) == trips


def test_triples_file_malformed_line_numbered(tmp_path):
    path = str(tmp_path / "bad.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("A\tr1\tB\njunk-line\n")
    with pytest.raises(GraphError, match=":2"):
        load_triples_file(path)
