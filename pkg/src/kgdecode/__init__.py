"""Constrained natural-language-to-SPARQL decoding over knowledge graphs.

At every decoding step the engine combines a query-template grammar,
prefix tries over human-readable entity/relation identifiers, and
connectivity pruning against the loaded knowledge graph, masking
everything else to -inf. A pluggable scorer stands in for the language
model so the constraint machinery is testable at desk scale.
"""

from .beam import (
    DecodeResult,
    Hypothesis,
    batch_decode,
    decode,
    make_noisy_oracle_scorer,
    make_uniform_scorer,
)
from .engine import Engine, IndexBundle, build_bundle
from .grammar import DecoderState, Slot, advance, grammar_allowed, initial_state
from .kg import (
    KnowledgeGraph,
    Triple,
    build_graph,
    contains_triple,
    outgoing_relations,
    tail_entities,
)
from .mask import MaskMode, TokenMask, allowed_tokens, apply_mask, restrict_trie_by_subjects
from .session import Session, open_session
from .trie import TokenTrie, allowed_continuations, build_trie, complete_key
from .vocab import Vocabulary, default_vocabulary, detokenize, tokenize_text

__version__ = "0.1.0"

__all__ = [
    "DecodeResult",
    "DecoderState",
    "Engine",
    "Hypothesis",
    "IndexBundle",
    "KnowledgeGraph",
    "MaskMode",
    "Session",
    "Slot",
    "TokenMask",
    "TokenTrie",
    "Triple",
    "Vocabulary",
    "advance",
    "allowed_continuations",
    "allowed_tokens",
    "apply_mask",
    "batch_decode",
    "build_bundle",
    "build_graph",
    "build_trie",
    "complete_key",
    "contains_triple",
    "decode",
    "default_vocabulary",
    "detokenize",
    "grammar_allowed",
    "initial_state",
    "make_noisy_oracle_scorer",
    "make_uniform_scorer",
    "open_session",
    "outgoing_relations",
    "restrict_trie_by_subjects",
    "tail_entities",
    "tokenize_text",
]
