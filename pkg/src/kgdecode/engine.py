"""Engine: one loaded knowledge base with everything decoding needs.

An :class:`IndexBundle` is immutable; the :class:`Engine` holds the
current bundle behind a single reference so a knowledge-base swap is
atomic. Decodes snapshot the bundle once at entry, so a decode that
started before a swap completes against the old graph.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from . import beam as beam_mod
from .executor import answer as executor_answer
from .grammar import GrammarContext
from .identifiers import IdentifierTable, LabelEntry, build_identifier_table
from .kg import KnowledgeGraph, Triple, build_graph
from .mask import MaskMode, TriePair
from .trie import TokenTrie, build_trie
from .vocab import Vocabulary, default_vocabulary


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class IndexBundle:
    vocab: Vocabulary
    graph: KnowledgeGraph
    entity_table: IdentifierTable
    relation_table: IdentifierTable
    entity_trie: TokenTrie
    relation_trie: TokenTrie
    grammar_ctx: GrammarContext
    strict_tails: bool = False

    @property
    def tries(self) -> TriePair:
        return TriePair(self.entity_trie, self.relation_trie)


def build_bundle(
    triples: Iterable[Triple | tuple[str, str, str]],
    labels: Mapping[str, LabelEntry] | None = None,
    *,
    vocab: Vocabulary | None = None,
    max_patterns: int = 4,
    variable_budget: int = 10,
    strict_tails: bool = False,
) -> IndexBundle:
    """Build graph, identifier tables and tries from raw triples and labels.

    Label entries referencing keys absent from the triples are an error;
    graph keys without a label entry get one derived from the key itself.
    """
    vocab = vocab or default_vocabulary()
    graph = build_graph(triples)
    labels = labels or {}
    known = graph.entities | graph.relations
    for key in labels:
        if key not in known:
            raise EngineError(f"labels file references unknown key {key!r}")

    entity_table = build_identifier_table(graph.entities, labels, vocab)
    relation_table = build_identifier_table(graph.relations, labels, vocab)
    entity_trie = build_trie(entity_table.identifiers())
    relation_trie = build_trie(relation_table.identifiers())
    ctx = GrammarContext(
        vocab=vocab,
        entity_trie=entity_trie,
        relation_trie=relation_trie,
        max_patterns=max_patterns,
        variable_budget=variable_budget,
    )
    return IndexBundle(
        vocab=vocab,
        graph=graph,
        entity_table=entity_table,
        relation_table=relation_table,
        entity_trie=entity_trie,
        relation_trie=relation_trie,
        grammar_ctx=ctx,
        strict_tails=strict_tails,
    )


class Engine:
    """Thread-safe holder of the active bundle, with decode helpers."""

    def __init__(self, bundle: IndexBundle):
        self._bundle = bundle
        self._swap_lock = threading.Lock()

    @property
    def bundle(self) -> IndexBundle:
        return self._bundle

    def swap(self, new_bundle: IndexBundle) -> None:
        """Atomically replace the active bundle.

        The vocabulary must be identical token for token, otherwise masks
        and scorer outputs would silently disagree across the swap.
        """
        with self._swap_lock:
            if new_bundle.vocab.tokens != self._bundle.vocab.tokens:
                raise EngineError("cannot swap: vocabulary differs from the active one")
            self._bundle = new_bundle

    def swap_graph(
        self,
        triples: Iterable[Triple | tuple[str, str, str]],
        labels: Mapping[str, LabelEntry] | None = None,
    ) -> IndexBundle:
        """Build a bundle for a new graph under the current vocabulary and swap.

        Identifier sets that cannot be tokenized under the current
        vocabulary are rejected (the build raises before any swap).
        """
        current = self._bundle
        new_bundle = build_bundle(
            triples,
            labels,
            vocab=current.vocab,
            max_patterns=current.grammar_ctx.max_patterns,
            variable_budget=current.grammar_ctx.variable_budget,
            strict_tails=current.strict_tails,
        )
        self.swap(new_bundle)
        return new_bundle

    def decode(
        self,
        question: str,
        scorer,
        mode: MaskMode = MaskMode.FULL,
        beam_size: int = 10,
        max_len: int = 128,
    ) -> beam_mod.DecodeResult:
        return beam_mod.decode(question, scorer, self._bundle, mode, beam_size, max_len)

    def batch_decode(
        self,
        questions: Sequence[str],
        scorer,
        mode: MaskMode = MaskMode.FULL,
        beam_size: int = 10,
        max_len: int = 128,
    ):
        return beam_mod.batch_decode(questions, scorer, self._bundle, mode, beam_size, max_len)

    def answer(self, result: beam_mod.DecodeResult):
        return executor_answer(result, self._bundle)

    def with_strict_tails(self, strict: bool) -> "Engine":
        return Engine(replace(self._bundle, strict_tails=strict))
