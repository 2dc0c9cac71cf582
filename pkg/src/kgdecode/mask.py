"""Per-step allowed-token computation.

Combines three layers: the structural grammar, the identifier tries, and
connectivity pruning against the knowledge graph. Disallowed tokens are
applied to scores as negative infinity. Three modes:

* ``FULL``        - tries plus connectivity pruning,
* ``NO_PRUNING``  - tries only,
* ``UNCONSTRAINED`` - the whole vocabulary (plain language-model decoding).

Allowed sets are contained in one another in that order at every state.
If pruning empties the candidate set mid-identifier the mask is empty and
the hypothesis dies; constraints are never silently relaxed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .grammar import DecoderState, EntRef, Slot, grammar_allowed, variable_candidates
from .kg import KnowledgeGraph, outgoing_relations, pair_tail_entities, tail_entities
from .trie import TokenTrie, restricted_continuations
from .vocab import Vocabulary


class MaskError(ValueError):
    pass


class MaskMode(Enum):
    FULL = "full"
    NO_PRUNING = "no-pruning"
    UNCONSTRAINED = "unconstrained"

    @classmethod
    def parse(cls, text: str) -> "MaskMode":
        for m in cls:
            if m.value == text:
                return m
        raise MaskError(f"unknown mode {text!r}; expected one of {[m.value for m in cls]}")


class TriePair(NamedTuple):
    entity: TokenTrie
    relation: TokenTrie


class TokenMask:
    """Allowed token-index set over a vocabulary of ``size`` tokens."""

    __slots__ = ("allowed", "size", "_indices")

    def __init__(self, allowed, size: int):
        self.allowed: frozenset[int] = frozenset(allowed)
        self.size = size
        self._indices: np.ndarray | None = None

    def sorted_tokens(self) -> list[int]:
        return sorted(self.allowed)

    def indices(self) -> np.ndarray:
        if self._indices is None:
            self._indices = np.fromiter(sorted(self.allowed), dtype=np.int64, count=len(self.allowed))
        return self._indices

    def packed(self) -> bytes:
        """LSB-first bitset: token index 0 is bit 0 of byte 0."""
        buf = bytearray((self.size + 7) // 8)
        for t in self.allowed:
            buf[t >> 3] |= 1 << (t & 7)
        return bytes(buf)

    def __contains__(self, token: int) -> bool:
        return token in self.allowed

    def __len__(self) -> int:
        return len(self.allowed)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TokenMask)
            and self.size == other.size
            and self.allowed == other.allowed
        )

    def __repr__(self) -> str:
        return f"TokenMask({len(self.allowed)}/{self.size})"


@lru_cache(maxsize=8)
def full_mask(size: int) -> TokenMask:
    return TokenMask(range(size), size)


def restrict_trie_by_subjects(
    trie: TokenTrie, prefix: Sequence[int], subjects: frozenset[str] | None
) -> set[int]:
    """Tokens extending ``prefix`` toward an identifier of some subject.

    ``None`` lifts the restriction (all continuations). An empty subject
    set yields the empty set; a prefix not present in the trie too.
    """
    node = trie.node_at(prefix)
    if node is None:
        return set()
    return set(restricted_continuations(node, subjects))


def allowed_tokens(
    state: DecoderState,
    mode: MaskMode,
    graph: KnowledgeGraph,
    tries: TriePair,
    vocab: Vocabulary,
    *,
    strict_tails: bool = False,
) -> TokenMask:
    """The allowed-token mask for one decoding step.

    Outside the pattern block this is the structural grammar. At pattern
    slots, identifier tokens come from the tries; under ``FULL`` the
    relation candidates shrink to relations leaving the concrete head and
    tail candidates shrink to entities reachable through the relation.
    A variable head leaves relation pruning inapplicable. ``strict_tails``
    additionally conditions tail candidates on the (head, relation) pair.
    """
    size = len(vocab)
    if mode is MaskMode.UNCONSTRAINED:
        return full_mask(size)

    slot = state.slot
    if slot in (Slot.QUERY_FORM, Slot.PROJECTION, Slot.END):
        return TokenMask(grammar_allowed(state), size)

    allowed: set[int] = set()

    if slot is Slot.PATTERN_HEAD:
        node = state.trie_node if state.mid_identifier() else tries.entity.root
        allowed.update(restricted_continuations(node, None))
        if not state.mid_identifier():
            allowed.update(variable_candidates(state))

    elif slot is Slot.PATTERN_RELATION:
        subjects = None
        if mode is MaskMode.FULL and isinstance(state.current_head, EntRef):
            subjects = outgoing_relations(graph, state.current_head.key)
        node = state.trie_node if state.mid_identifier() else tries.relation.root
        allowed.update(restricted_continuations(node, subjects))

    elif slot is Slot.PATTERN_TAIL:
        if state.tail_done:
            allowed.add(vocab.dot_id)
        else:
            subjects = None
            if mode is MaskMode.FULL:
                assert state.current_relation is not None
                if strict_tails and isinstance(state.current_head, EntRef):
                    subjects = pair_tail_entities(
                        graph, state.current_head.key, state.current_relation
                    )
                else:
                    subjects = tail_entities(graph, state.current_relation)
            node = state.trie_node if state.mid_identifier() else tries.entity.root
            allowed.update(restricted_continuations(node, subjects))
            if not state.mid_identifier():
                allowed.update(variable_candidates(state))

    else:  # PATTERN_BOUNDARY: close the block or open the next head.
        if state.form == "ASK" or state.projection_bound:
            allowed.add(vocab.rbrace_id)
        if state.pattern_count < state.ctx.max_patterns:
            allowed.update(restricted_continuations(tries.entity.root, None))
            allowed.update(variable_candidates(state))

    return TokenMask(allowed, size)


def apply_mask(logits: np.ndarray, mask: TokenMask) -> np.ndarray:
    """Copy of ``logits`` with disallowed positions at -inf."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (mask.size,):
        raise MaskError(f"logits shape {logits.shape} != vocabulary size ({mask.size},)")
    out = np.full(mask.size, -np.inf, dtype=np.float64)
    idx = mask.indices()
    out[idx] = logits[idx]
    return out
