"""Deterministic synthetic graphs and question datasets.

Everything a pipeline test needs with exact ground truth: a random (but
seeded) knowledge graph, label entries for readable identifiers, and
question/gold-query/gold-answer items rendered from templates. Every
emitted gold query is parsed, connectivity-checked and executed at
generation time, so datasets are correct by construction.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

from .engine import IndexBundle, build_bundle
from .evaluation import DatasetItem, gold_result, write_dataset
from .executor import parse_query, connectivity_ok
from .identifiers import LabelEntry, write_labels_file
from .kg import Triple, write_triples_file
from .vocab import Vocabulary


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class QuestionMix:
    one_hop: int = 4
    two_hop: int = 0
    count: int = 0
    ask: int = 0

    def total(self) -> int:
        return self.one_hop + self.two_hop + self.count + self.ask


@dataclass(frozen=True)
class FixtureSpec:
    entities: int = 12
    relations: int = 3
    density: float = 2.0  # triples per entity
    mix: QuestionMix = QuestionMix()
    alphabet: str = "abcdefghijklmnopqrstuvwxyz"
    seed: int = 0
    max_patterns: int = 4
    type_pool: int = 3
    label_len: tuple[int, int] = (3, 7)
    two_word_labels: bool = True
    max_types: int = 2


@dataclass
class Fixture:
    spec: FixtureSpec
    triples: list[Triple]
    labels: dict[str, LabelEntry]
    items: list[DatasetItem]
    bundle: IndexBundle

    def gold_map(self) -> dict[str, str]:
        return {it.question: it.gold_query for it in self.items}

    def write_files(self, directory: str) -> dict[str, str]:
        os.makedirs(directory, exist_ok=True)
        paths = {
            "triples": os.path.join(directory, "triples.tsv"),
            "labels": os.path.join(directory, "labels.tsv"),
            "dataset": os.path.join(directory, "dataset.tsv"),
        }
        write_triples_file(paths["triples"], sorted(self.triples))
        write_labels_file(paths["labels"], [self.labels[k] for k in sorted(self.labels)])
        write_dataset(paths["dataset"], self.items)
        return paths


def _word(rng: random.Random, alphabet: str, lo: int = 3, hi: int = 7) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


def _surface(bundle: IndexBundle, key: str, relation: bool = False) -> str:
    table = bundle.relation_table if relation else bundle.entity_table
    return table.surface_of(key)


def generate(spec: FixtureSpec, vocab: Vocabulary | None = None) -> Fixture:
    """Generate a graph and dataset; identical spec gives identical output."""
    if spec.entities < 1 or spec.relations < 1:
        raise FixtureError("need at least one entity and one relation")
    n_triples = max(1, round(spec.density * spec.entities))
    rng = random.Random(spec.seed)

    entity_keys = [f"Q{i}" for i in range(spec.entities)]
    relation_keys = [f"P{i}" for i in range(spec.relations)]
    types = [_word(rng, spec.alphabet, 3, 6) for _ in range(max(1, spec.type_pool))]
    lo, hi = spec.label_len

    labels: dict[str, LabelEntry] = {}
    for key in entity_keys:
        n_types = rng.randint(0, spec.max_types) if spec.max_types else 0
        label = _word(rng, spec.alphabet, lo, hi)
        if spec.two_word_labels:
            label += " " + _word(rng, spec.alphabet, 2, 5)
        labels[key] = LabelEntry(
            key=key,
            label=label,
            types=tuple(sorted(rng.sample(types, n_types))),
            iri=f"kb:{key}",
        )
    for key in relation_keys:
        labels[key] = LabelEntry(
            key=key, label=_word(rng, spec.alphabet, lo, hi), types=(), iri=f"kb:{key}"
        )

    triples: set[Triple] = set()
    attempts = 0
    while len(triples) < n_triples and attempts < n_triples * 50:
        attempts += 1
        triples.add(
            Triple(rng.choice(entity_keys), rng.choice(relation_keys), rng.choice(entity_keys))
        )
    # Guarantee chains for two-hop questions: extend an existing edge.
    if spec.mix.two_hop:
        base = sorted(triples)
        for _ in range(spec.mix.two_hop):
            h, r, mid = base[rng.randrange(len(base))]
            triples.add(Triple(mid, rng.choice(relation_keys), rng.choice(entity_keys)))

    used_keys = {k for t in triples for k in (t.head, t.tail)} | {t.relation for t in triples}
    labels = {k: v for k, v in labels.items() if k in used_keys}
    bundle = build_bundle(
        sorted(triples), labels, vocab=vocab, max_patterns=spec.max_patterns
    )

    items = _make_items(spec, bundle, rng)
    fixture = Fixture(spec=spec, triples=sorted(triples), labels=labels, items=items, bundle=bundle)
    _self_check(fixture)
    return fixture


def _make_items(spec: FixtureSpec, bundle: IndexBundle, rng: random.Random) -> list[DatasetItem]:
    g = bundle.graph
    triples = sorted(g.triples)
    by_head: dict[str, list[Triple]] = {}
    for t in triples:
        by_head.setdefault(t.head, []).append(t)

    items: list[DatasetItem] = []
    used_questions: set[str] = set()

    def push(question: str, gold: str, answers: frozenset[str]) -> None:
        if question in used_questions:
            question = f"{question} ({len(items)})"
        used_questions.add(question)
        items.append(DatasetItem(question, gold, answers))

    def label(key: str, relation: bool = False) -> str:
        table = bundle.relation_table if relation else bundle.entity_table
        return table.surface_of(key)[2:-2].split(" (")[0].split(" |")[0]

    for _ in range(spec.mix.one_hop):
        h, r, _ = triples[rng.randrange(len(triples))]
        answers = frozenset(t.tail for t in by_head[h] if t.relation == r)
        gold = (
            f"SELECT DISTINCT ?var0 WHERE {{ {_surface(bundle, h)} "
            f"{_surface(bundle, r, relation=True)} ?var0 . }}"
        )
        push(f"who did {label(h)} {label(r, True)}?", gold, answers)

    two_hop_starts = [
        t for t in triples if any(t2.head == t.tail for t2 in triples)
    ]
    for _ in range(spec.mix.two_hop):
        if not two_hop_starts:
            raise FixtureError("graph has no two-hop chain; raise density or entity count")
        h, r1, mid = two_hop_starts[rng.randrange(len(two_hop_starts))]
        seconds = [t for t in by_head.get(mid, ())]
        h2, r2, _ = seconds[rng.randrange(len(seconds))]
        answers = frozenset(
            t2.tail
            for t in triples
            if t.head == h and t.relation == r1
            for t2 in by_head.get(t.tail, ())
            if t2.relation == r2
        )
        gold = (
            f"SELECT DISTINCT ?var0 WHERE {{ {_surface(bundle, h)} "
            f"{_surface(bundle, r1, relation=True)} ?var1 . ?var1 "
            f"{_surface(bundle, r2, relation=True)} ?var0 . }}"
        )
        push(f"what did {label(h)} {label(r1, True)} then {label(r2, True)}?", gold, answers)

    for _ in range(spec.mix.count):
        h, r, _ = triples[rng.randrange(len(triples))]
        n = len({t.tail for t in by_head[h] if t.relation == r})
        gold = (
            f"SELECT DISTINCT COUNT ( ?var0 ) WHERE {{ {_surface(bundle, h)} "
            f"{_surface(bundle, r, relation=True)} ?var0 . }}"
        )
        push(f"how many {label(r, True)} does {label(h)} have?", gold, frozenset({str(n)}))

    for _ in range(spec.mix.ask):
        h, r, t = triples[rng.randrange(len(triples))]
        gold = (
            f"ASK {{ {_surface(bundle, h)} {_surface(bundle, r, relation=True)} "
            f"{_surface(bundle, t)} . }}"
        )
        push(f"is it true that {label(h)} {label(r, True)} {label(t)}?", gold, frozenset({"true"}))

    return items


def _self_check(fixture: Fixture) -> None:
    """Every gold query must parse, be connectivity-valid and execute to
    its recorded, non-empty answers."""
    bundle = fixture.bundle
    for item in fixture.items:
        ast = parse_query(item.gold_query, bundle.entity_table, bundle.relation_table)
        if not connectivity_ok(ast, bundle.graph):
            raise FixtureError(f"gold query not connectivity-valid: {item.gold_query}")
        result = gold_result(item, bundle)
        if result.is_empty():
            raise FixtureError(f"gold query executes empty: {item.gold_query}")
        if result.answer_set() != item.gold_answers:
            raise FixtureError(
                f"gold answers mismatch for {item.question!r}: "
                f"{sorted(result.answer_set())} != {sorted(item.gold_answers)}"
            )


def film_scenario() -> Fixture:
    """The film-director scenario: the writing relation exists in the graph
    but is not attached to the director, so a (director, write, _) pattern
    is invalid and pruning must exclude it."""
    triples = [
        Triple("Michael_Bay", "direct", "Transformers"),
        Triple("Michael_Bay", "direct", "Armageddon"),
        Triple("Transformers", "nominated_for", "Academy_Awards"),
        Triple("Armageddon", "nominated_for", "Academy_Awards"),
        Triple("Ehren_Kruger", "write", "Transformers"),
    ]
    labels = {
        "Michael_Bay": LabelEntry("Michael_Bay", "Michael Bay", ("film director",), "kb:Michael_Bay"),
        "Transformers": LabelEntry("Transformers", "Transformers", ("film",), "kb:Transformers"),
        "Armageddon": LabelEntry("Armageddon", "Armageddon", ("film",), "kb:Armageddon"),
        "Academy_Awards": LabelEntry("Academy_Awards", "Academy Awards", ("award",), "kb:Academy_Awards"),
        "Ehren_Kruger": LabelEntry("Ehren_Kruger", "Ehren Kruger", ("screenwriter",), "kb:Ehren_Kruger"),
        "direct": LabelEntry("direct", "direct", (), "kb:direct"),
        "nominated_for": LabelEntry("nominated_for", "nominated for", (), "kb:nominated_for"),
        "write": LabelEntry("write", "write", (), "kb:write"),
    }
    bundle = build_bundle(triples, labels)
    gold = (
        "SELECT DISTINCT ?var0 WHERE "
        "{ [ michael bay (film director) ] [ direct ] ?var0 . "
        "?var0 [ nominated for ] [ academy awards (award) ] . }"
    )
    items = [
        DatasetItem(
            "What Michael Bay work has nominated for Academy Awards?",
            gold,
            frozenset({"Transformers", "Armageddon"}),
        )
    ]
    fixture = Fixture(
        spec=FixtureSpec(entities=5, relations=3, mix=QuestionMix(one_hop=0)),
        triples=triples,
        labels=labels,
        items=items,
        bundle=bundle,
    )
    _self_check(fixture)
    return fixture


@dataclass
class EvolutionPair:
    t0: Fixture
    t1: Fixture
    delta_items: list[DatasetItem]


def kb_evolution_pair(spec: FixtureSpec, vocab: Vocabulary | None = None) -> EvolutionPair:
    """A graph plus an evolved version with facts added after the fact.

    Delta questions come in two shapes: a brand-new entity with one
    outgoing edge, and a new edge on an existing entity via a relation it
    never had. Each delta item is verified empty on the old graph and
    answerable on the new one.
    """
    t0 = generate(spec, vocab=vocab)
    rng = random.Random(spec.seed + 1)
    g0 = t0.bundle.graph
    entity_keys = sorted(g0.entities)
    relation_keys = sorted(g0.relations)

    new_key = "Q_new_match"
    new_label = LabelEntry(
        key=new_key,
        label=_word(rng, spec.alphabet) + " versus " + _word(rng, spec.alphabet),
        types=("event",),
        iri=f"kb:{new_key}",
    )
    r_new = rng.choice(relation_keys)
    t_new = rng.choice(entity_keys)
    extra_one = Triple(new_key, r_new, t_new)

    pair = None
    for h in entity_keys:
        for r in relation_keys:
            if r not in g0.out_relations.get(h, frozenset()):
                pair = (h, r)
                break
        if pair:
            break
    if pair is None:
        raise FixtureError("graph is complete; no room for an evolution edge")
    h2, r2 = pair
    t2 = rng.choice(entity_keys)
    extra_two = Triple(h2, r2, t2)

    labels_t1 = dict(t0.labels)
    labels_t1[new_key] = new_label
    triples_t1 = sorted(set(t0.triples) | {extra_one, extra_two})
    bundle_t1 = build_bundle(triples_t1, labels_t1, vocab=t0.bundle.vocab,
                             max_patterns=spec.max_patterns)

    def surf(key: str, relation: bool = False) -> str:
        return _surface(bundle_t1, key, relation=relation)

    gold_one = f"SELECT DISTINCT ?var0 WHERE {{ {surf(new_key)} {surf(r_new, True)} ?var0 . }}"
    answers_one = frozenset(
        t.tail for t in bundle_t1.graph.triples if t.head == new_key and t.relation == r_new
    )
    gold_two = (
        f"SELECT DISTINCT COUNT ( ?var0 ) WHERE {{ {surf(h2)} {surf(r2, True)} ?var0 . }}"
    )
    n_two = len({t.tail for t in bundle_t1.graph.triples if t.head == h2 and t.relation == r2})

    delta_items = [
        DatasetItem(f"what is the result of {new_label.label}?", gold_one, answers_one),
        DatasetItem(f"how many {r2} does {h2} have now?", gold_two, frozenset({str(n_two)})),
    ]

    t1 = Fixture(spec=spec, triples=triples_t1, labels=labels_t1, items=delta_items, bundle=bundle_t1)
    _self_check(t1)
    _check_delta_unanswerable(t0.bundle, delta_items)
    return EvolutionPair(t0=t0, t1=t1, delta_items=delta_items)


def _check_delta_unanswerable(bundle_t0: IndexBundle, delta_items: list[DatasetItem]) -> None:
    """Each delta gold must be empty or unparseable against the old graph."""
    from .executor import ParseError, execute

    for item in delta_items:
        try:
            ast = parse_query(item.gold_query, bundle_t0.entity_table, bundle_t0.relation_table)
        except ParseError:
            continue
        if not execute(ast, bundle_t0.graph).is_empty():
            raise FixtureError(f"delta item answerable before evolution: {item.question!r}")
