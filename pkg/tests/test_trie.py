from __future__ import annotations

import random

import pytest

from kgdecode.identifiers import Identifier
from kgdecode.trie import (
    TrieError,
    allowed_continuations,
    build_trie,
    complete_key,
    iter_sequences,
    restricted_continuations,
)
from kgdecode.vocab import default_vocabulary, tokenize_identifier

VOCAB = default_vocabulary()


def ident(key: str, surface: str) -> Identifier:
    return Identifier(key, surface, tokenize_identifier(surface, VOCAB))


# Oracle: continuations by scanning every inserted sequence.
def scan_continuations(seqs, prefix):
    out = set()
    for seq in seqs:
        if len(seq) > len(prefix) and seq[: len(prefix)] == tuple(prefix):
            out.add(seq[len(prefix)])
    return out


def test_empty_trie():
    trie = build_trie([])
    assert allowed_continuations(trie, []) == set()
    assert len(trie) == 0


def test_two_identifiers_continuations_match_scan():
    ids = [ident("A", "[ a ]"), ident("AB", "[ ab ]")]
    trie = build_trie(ids)
    seqs = [i.token_seq for i in ids]
    prefix = [VOCAB.lbracket_id, VOCAB.char_id("a")]
    got = allowed_continuations(trie, prefix)
    assert got == scan_continuations(seqs, prefix)
    assert got == {VOCAB.rbracket_id, VOCAB.char_id("b")}


def test_unknown_prefix_empty():
    trie = build_trie([ident("A", "[ a ]")])
    assert allowed_continuations(trie, [VOCAB.char_id("z")]) == set()


def test_single_identifier_close_only():
    trie = build_trie([ident("A", "[ a ]")])
    assert allowed_continuations(trie, [VOCAB.lbracket_id, VOCAB.char_id("a")]) == {
        VOCAB.rbracket_id
    }


def test_film_fixture_terminal_count_and_first_tokens(film_fixture):
    bundle = film_fixture.bundle
    trie = bundle.entity_trie
    assert len(trie) == len(bundle.graph.entities)
    got = allowed_continuations(trie, [VOCAB.lbracket_id])
    first_chars = {seq[1] for seq, _ in iter_sequences(trie)}
    assert got == first_chars


def test_complete_key_resolution(film_fixture):
    bundle = film_fixture.bundle
    trie = bundle.entity_trie
    seq = bundle.entity_table.by_key["Michael_Bay"].token_seq
    assert complete_key(trie, seq) == "Michael_Bay"
    assert complete_key(trie, seq[:-1]) is None
    assert complete_key(trie, seq + (VOCAB.char_id("x"),)) is None


def test_duplicate_sequence_rejected():
    with pytest.raises(TrieError):
        build_trie([ident("A", "[ a ]"), ident("B", "[ a ]")])


def test_every_split_point_continues(small_fixture):
    trie = small_fixture.bundle.entity_trie
    for seq, _ in iter_sequences(trie):
        for i in range(len(seq)):
            assert seq[i] in allowed_continuations(trie, seq[:i])


def test_random_walks_reproduce_only_inserted(small_fixture):
    """Fuzz: walks that always follow allowed continuations and stop only
    at terminals can produce exactly the inserted identifiers."""
    trie = small_fixture.bundle.entity_trie
    inserted = {seq for seq, _ in iter_sequences(trie)}
    rng = random.Random(99)
    for _ in range(10_000):
        node = trie.root
        walk = []
        while True:
            if node.terminal_key is not None:
                break
            choices = [tok for tok, _ in node.sorted_items]
            tok = rng.choice(choices)
            walk.append(tok)
            node = node.children[tok]
        assert tuple(walk) in inserted


def test_restricted_continuations_subject_filter(film_fixture):
    bundle = film_fixture.bundle
    trie = bundle.entity_trie
    root = trie.node_at([VOCAB.lbracket_id])
    # No subjects: nothing allowed.
    assert restricted_continuations(root, frozenset()) == []
    # All subjects: same as unrestricted.
    assert restricted_continuations(root, bundle.graph.entities) == restricted_continuations(
        root, None
    )
    # Single subject: only its first body character.
    only_b = restricted_continuations(root, frozenset({"Transformers"}))
    assert only_b == [VOCAB.char_id("t")]


def test_memory_linear_in_token_count(small_fixture):
    trie = small_fixture.bundle.entity_trie

    def count_nodes(node):
        return 1 + sum(count_nodes(c) for _, c in node.sorted_items)

    total_tokens = sum(len(seq) for seq, _ in iter_sequences(trie))
    assert count_nodes(trie.root) <= total_tokens + 1
