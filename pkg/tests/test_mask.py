from __future__ import annotations

import random

import numpy as np
import pytest

from kgdecode.grammar import EntRef, Slot, advance, grammar_allowed, initial_state
from kgdecode.kg import outgoing_relations, tail_entities
from kgdecode.mask import (
    MaskError,
    MaskMode,
    TokenMask,
    allowed_tokens,
    apply_mask,
    full_mask,
    restrict_trie_by_subjects,
)
from kgdecode.trie import iter_sequences
from kgdecode.vocab import default_vocabulary, tokenize_text

VOCAB = default_vocabulary()


def mask_at(bundle, tokens, mode, strict_tails=False):
    state = initial_state(bundle.grammar_ctx)
    for tok in tokens:
        state = advance(state, tok)
    return (
        state,
        allowed_tokens(
            state, mode, bundle.graph, bundle.tries, bundle.vocab, strict_tails=strict_tails
        ),
    )


def oracle_allowed(state, mode, bundle):
    """Exhaustive per-token oracle, straight from the definitions.

    For every vocabulary token: structural legality from the grammar
    table; identifier legality by scanning every identifier of every
    subject in the relevant neighbour set and testing prefix extension.
    Completely independent of the trie walk the engine uses.
    """
    if mode is MaskMode.UNCONSTRAINED:
        return set(range(len(bundle.vocab)))
    allowed = set(grammar_allowed(state))
    allowed.discard(VOCAB.lbracket_id)  # identifier tokens recomputed below

    slot = state.slot
    in_pattern = slot in (Slot.PATTERN_HEAD, Slot.PATTERN_RELATION, Slot.PATTERN_TAIL, Slot.PATTERN_BOUNDARY)
    if not in_pattern:
        return set(grammar_allowed(state))
    if slot is Slot.PATTERN_TAIL and state.tail_done:
        return {VOCAB.dot_id}
    if slot is Slot.PATTERN_BOUNDARY and state.pattern_count >= state.ctx.max_patterns:
        return allowed

    # Which trie/namespace and which subject restriction applies here?
    if slot is Slot.PATTERN_RELATION:
        idents = bundle.relation_table.by_key
        if mode is MaskMode.FULL and isinstance(state.current_head, EntRef):
            subjects = outgoing_relations(bundle.graph, state.current_head.key)
        else:
            subjects = set(idents)
    else:
        idents = bundle.entity_table.by_key
        if slot is Slot.PATTERN_TAIL and mode is MaskMode.FULL:
            subjects = tail_entities(bundle.graph, state.current_relation)
        else:
            subjects = set(idents)

    prefix = state.emitted[state.ident_start :] if state.mid_identifier() else ()
    for tok in range(len(bundle.vocab)):
        probe = prefix + (tok,)
        for key in subjects:
            seq = idents[key].token_seq
            if seq[: len(probe)] == probe:
                allowed.add(tok)
                break
    return allowed


def test_relation_mask_excludes_unlinked_relation(film_fixture):
    """With the director as head, no token path completing the writing
    relation's identifier may survive full-mode pruning."""
    bundle = film_fixture.bundle
    head = bundle.entity_table.by_key["Michael_Bay"].token_seq
    prefix = tokenize_text("SELECT DISTINCT ?var0 WHERE {", VOCAB) + head
    state, mask = mask_at(bundle, prefix + (VOCAB.lbracket_id,), MaskMode.FULL)
    write_seq = bundle.relation_table.by_key["write"].token_seq
    # Walk greedily toward the write identifier: blocked at some step.
    blocked = False
    st = state
    for tok in write_seq[1:]:
        m = allowed_tokens(st, MaskMode.FULL, bundle.graph, bundle.tries, bundle.vocab)
        if tok not in m.allowed:
            blocked = True
            break
        st = advance(st, tok)
    assert blocked
    # The very first body character 'w' is already excluded here, since no
    # outgoing relation of the head starts with it.
    assert VOCAB.char_id("w") not in mask.allowed
    # Without pruning the same state admits it.
    m_np = allowed_tokens(state, MaskMode.NO_PRUNING, bundle.graph, bundle.tries, bundle.vocab)
    assert VOCAB.char_id("w") in m_np.allowed


def test_variable_head_disables_relation_pruning(film_fixture):
    bundle = film_fixture.bundle
    prefix = tokenize_text("ASK {", VOCAB) + (VOCAB.variable_ids[0], VOCAB.lbracket_id)
    _, mask_full = mask_at(bundle, prefix, MaskMode.FULL)
    _, mask_np = mask_at(bundle, prefix, MaskMode.NO_PRUNING)
    assert mask_full == mask_np


def test_tail_mask_restricted_to_relation_tails():
    """Brute-force derived case: tails of r1 = {B, D}; at the tail slot
    only identifiers of B and D (plus variables) may start."""
    from kgdecode.engine import build_bundle
    from kgdecode.identifiers import LabelEntry

    triples = [("A", "r1", "B"), ("C", "r1", "D"), ("A", "r2", "E")]
    labels = {
        k: LabelEntry(k, lbl, (), f"x:{k}")
        for k, lbl in [
            ("A", "alpha"), ("B", "bravo"), ("C", "charlie"),
            ("D", "delta"), ("E", "echo"), ("r1", "one"), ("r2", "two"),
        ]
    }
    bundle = build_bundle(triples, labels)
    prefix = tokenize_text("ASK { [ alpha ] [ one ]", VOCAB) + (VOCAB.lbracket_id,)
    state, mask = mask_at(bundle, prefix, MaskMode.FULL)
    assert mask.allowed == {VOCAB.char_id("b"), VOCAB.char_id("d")}
    assert oracle_allowed(state, MaskMode.FULL, bundle) == mask.allowed

    # Before the bracket: variables offered alongside the identifier opener.
    state2, mask2 = mask_at(bundle, prefix[:-1], MaskMode.FULL)
    assert VOCAB.lbracket_id in mask2.allowed
    assert VOCAB.variable_ids[0] in mask2.allowed
    assert oracle_allowed(state2, MaskMode.FULL, bundle) == mask2.allowed


def test_strict_tails_conditions_on_pair():
    from kgdecode.engine import build_bundle
    from kgdecode.identifiers import LabelEntry

    triples = [("A", "r1", "B"), ("C", "r1", "D")]
    labels = {
        k: LabelEntry(k, lbl, (), f"x:{k}")
        for k, lbl in [("A", "alpha"), ("B", "bravo"), ("C", "charlie"), ("D", "delta"), ("r1", "one")]
    }
    bundle = build_bundle(triples, labels)
    prefix = tokenize_text("ASK { [ alpha ] [ one ]", VOCAB) + (VOCAB.lbracket_id,)
    _, loose = mask_at(bundle, prefix, MaskMode.FULL)
    _, strict = mask_at(bundle, prefix, MaskMode.FULL, strict_tails=True)
    assert loose.allowed == {VOCAB.char_id("b"), VOCAB.char_id("d")}
    assert strict.allowed == {VOCAB.char_id("b")}  # only (A, r1, B) exists


def test_restrict_trie_by_subjects_cases(film_fixture):
    bundle = film_fixture.bundle
    trie = bundle.entity_trie
    assert restrict_trie_by_subjects(trie, [VOCAB.lbracket_id], frozenset()) == set()
    everyone = bundle.graph.entities
    assert restrict_trie_by_subjects(trie, [VOCAB.lbracket_id], everyone) == {
        seq[1] for seq, _ in iter_sequences(trie)
    }
    only = restrict_trie_by_subjects(trie, [VOCAB.lbracket_id], frozenset({"Transformers"}))
    assert only == {VOCAB.char_id("t")}


def test_containment_full_nopruning_unconstrained(small_fixture):
    """Mode containment along random accepted walks."""
    bundle = small_fixture.bundle
    rng = random.Random(3)
    for _ in range(300):
        state = initial_state(bundle.grammar_ctx)
        for _step in range(rng.randrange(1, 40)):
            m_full = allowed_tokens(state, MaskMode.FULL, bundle.graph, bundle.tries, bundle.vocab)
            m_np = allowed_tokens(state, MaskMode.NO_PRUNING, bundle.graph, bundle.tries, bundle.vocab)
            m_un = allowed_tokens(state, MaskMode.UNCONSTRAINED, bundle.graph, bundle.tries, bundle.vocab)
            assert m_full.allowed <= m_np.allowed <= m_un.allowed
            choices = m_full.sorted_tokens() or m_np.sorted_tokens()
            if not choices:
                break
            state = advance(state, rng.choice(choices))
            if state.slot is Slot.END:
                break


def test_mask_equals_exhaustive_oracle_everywhere(small_fixture):
    """Walk states under both modes; the engine's mask must equal the
    brute-force per-token scan at every visited state."""
    bundle = small_fixture.bundle
    assert len(bundle.graph.entities) <= 50
    rng = random.Random(17)
    for mode in (MaskMode.FULL, MaskMode.NO_PRUNING):
        for _ in range(150):
            state = initial_state(bundle.grammar_ctx)
            while state.slot is not Slot.END:
                mask = allowed_tokens(state, mode, bundle.graph, bundle.tries, bundle.vocab)
                assert mask.allowed == oracle_allowed(state, mode, bundle), (
                    mode,
                    state.slot,
                    len(state.emitted),
                )
                toks = mask.sorted_tokens()
                if not toks:
                    break
                state = advance(state, rng.choice(toks))


def test_apply_mask_basics():
    logits = np.zeros(5)
    out = apply_mask(logits, TokenMask({0}, 5))
    assert out[0] == 0.0
    assert np.all(np.isneginf(out[1:]))
    assert np.all(logits == 0.0)  # pure

    out_full = apply_mask(np.arange(5.0), full_mask(5))
    assert np.array_equal(out_full, np.arange(5.0))

    out_empty = apply_mask(np.arange(5.0), TokenMask((), 5))
    assert np.all(np.isneginf(out_empty))


def test_apply_mask_length_mismatch():
    with pytest.raises(MaskError):
        apply_mask(np.zeros(4), TokenMask({0}, 5))


def test_packed_bit_order():
    mask = TokenMask({0, 9}, 12)
    packed = mask.packed()
    assert len(packed) == 2
    assert packed[0] == 0b0000_0001  # token 0 -> LSB of byte 0
    assert packed[1] == 0b0000_0010  # token 9 -> bit 1 of byte 1
