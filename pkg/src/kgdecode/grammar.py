"""Query-template state machine.

Tracks where in the query the decoder is, which triple-pattern slot is
open, the start index of the identifier currently being emitted, and the
resolved head/relation of the pattern in progress. The supported template:

    ('SELECT' 'DISTINCT'? ('COUNT' '(' var ')' | var) 'WHERE' | 'ASK')
    '{' (head relation tail '.')+ '}'

where head/tail are bracketed entity identifiers or variables and the
relation is a bracketed relation identifier. New variables must be
introduced in ascending order, a SELECT projection variable must occur in
at least one pattern before the block may close, and at most
``max_patterns`` patterns fit in one query.

``advance`` is pure: it validates shape (grammar plus trie membership) but
deliberately not connectivity, which is the mask engine's concern.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .trie import TokenTrie, TrieNode
from .vocab import Vocabulary


class GrammarError(ValueError):
    """Raised when a token is illegal at the current state."""


class Slot(Enum):
    QUERY_FORM = "QueryForm"
    PROJECTION = "ProjectionOrModifier"
    PATTERN_HEAD = "PatternHead"
    PATTERN_RELATION = "PatternRelation"
    PATTERN_TAIL = "PatternTail"
    PATTERN_BOUNDARY = "PatternBoundary"
    END = "End"


# Micro-positions inside the projection/modifier phase.
_START = 0
_AFTER_SELECT = 1
_AFTER_DISTINCT = 2
_AFTER_COUNT = 3
_AFTER_COUNT_LP = 4
_AFTER_COUNT_VAR = 5
_AFTER_COUNT_RP = 6
_AFTER_PROJ_VAR = 7
_AFTER_WHERE = 8
_AFTER_ASK = 9


@dataclass(frozen=True)
class VarRef:
    token_id: int


@dataclass(frozen=True)
class EntRef:
    key: str


@dataclass(frozen=True)
class GrammarContext:
    vocab: Vocabulary
    entity_trie: TokenTrie
    relation_trie: TokenTrie
    max_patterns: int = 4
    variable_budget: int = 10

    def __post_init__(self):
        if not 1 <= self.variable_budget <= len(self.vocab.variable_ids):
            raise ValueError("variable budget out of range")
        if self.max_patterns < 1:
            raise ValueError("max_patterns must be at least 1")


@dataclass(frozen=True)
class DecoderState:
    ctx: GrammarContext
    emitted: tuple[int, ...] = ()
    slot: Slot = Slot.QUERY_FORM
    stage: int = _START
    form: str | None = None
    distinct: bool = False
    count: bool = False
    projection_var: int | None = None
    ident_start: int | None = None
    trie_node: TrieNode | None = None
    current_head: VarRef | EntRef | None = None
    current_relation: str | None = None
    open_variables: frozenset[int] = frozenset()
    pattern_count: int = 0
    projection_bound: bool = False
    tail_done: bool = False

    def mid_identifier(self) -> bool:
        return self.ident_start is not None


def initial_state(ctx: GrammarContext) -> DecoderState:
    return DecoderState(ctx=ctx)


def variable_candidates(state: DecoderState) -> list[int]:
    """Variables usable at an entity slot: all already open, plus the next
    unused one (ascending introduction keeps alpha-equivalent beams apart)."""
    ctx = state.ctx
    out = sorted(state.open_variables)
    for vid in ctx.vocab.variable_ids[: ctx.variable_budget]:
        if vid not in state.open_variables:
            out.append(vid)
            break
    return out


def _closure_legal(state: DecoderState) -> bool:
    return state.form == "ASK" or state.projection_bound


def grammar_allowed(state: DecoderState) -> set[int]:
    """Structural tokens legal at this state.

    The bracket opener is offered naively here; the mask engine recomputes
    identifier tokens from the tries and owns connectivity pruning.
    """
    v = state.ctx.vocab
    slot = state.slot
    if slot is Slot.QUERY_FORM:
        return {v.select_id, v.ask_id}
    if slot is Slot.PROJECTION:
        stage = state.stage
        if stage == _AFTER_SELECT:
            return {v.distinct_id, v.count_id, v.variable_ids[0]}
        if stage == _AFTER_DISTINCT:
            return {v.count_id, v.variable_ids[0]}
        if stage == _AFTER_COUNT:
            return {v.lparen_id}
        if stage == _AFTER_COUNT_LP:
            return {v.variable_ids[0]}
        if stage == _AFTER_COUNT_VAR:
            return {v.rparen_id}
        if stage in (_AFTER_COUNT_RP, _AFTER_PROJ_VAR):
            return {v.where_id}
        if stage in (_AFTER_WHERE, _AFTER_ASK):
            return {v.lbrace_id}
        raise AssertionError(f"unreachable projection stage {stage}")
    if slot is Slot.PATTERN_HEAD:
        if state.mid_identifier():
            return set()
        return set(variable_candidates(state)) | {v.lbracket_id}
    if slot is Slot.PATTERN_RELATION:
        return set() if state.mid_identifier() else {v.lbracket_id}
    if slot is Slot.PATTERN_TAIL:
        if state.tail_done:
            return {v.dot_id}
        if state.mid_identifier():
            return set()
        return set(variable_candidates(state)) | {v.lbracket_id}
    if slot is Slot.PATTERN_BOUNDARY:
        out: set[int] = set()
        if _closure_legal(state):
            out.add(v.rbrace_id)
        if state.pattern_count < state.ctx.max_patterns:
            out |= set(variable_candidates(state)) | {v.lbracket_id}
        return out
    return set()  # END


def _illegal(state: DecoderState, token: int) -> GrammarError:
    v = state.ctx.vocab
    name = v.tokens[token] if 0 <= token < len(v) else f"<{token}>"
    return GrammarError(
        f"token {name!r} is not legal at slot {state.slot.value} (position {len(state.emitted)})"
    )


def advance(state: DecoderState, token: int) -> DecoderState:
    """Apply one token, returning the successor state.

    Raises :class:`GrammarError` on any token the grammar or the identifier
    tries do not admit; callers normally never trigger this because the
    mask engine filters candidates first.
    """
    ctx = state.ctx
    v = ctx.vocab
    emitted = state.emitted + (token,)
    slot = state.slot

    if slot is Slot.QUERY_FORM:
        if token == v.select_id:
            return DecoderState(ctx, emitted, Slot.PROJECTION, _AFTER_SELECT, form="SELECT")
        if token == v.ask_id:
            return DecoderState(ctx, emitted, Slot.PROJECTION, _AFTER_ASK, form="ASK")
        raise _illegal(state, token)

    if slot is Slot.PROJECTION:
        stage = state.stage
        if stage == _AFTER_SELECT and token == v.distinct_id:
            return DecoderState(ctx, emitted, slot, _AFTER_DISTINCT, form=state.form, distinct=True)
        if stage in (_AFTER_SELECT, _AFTER_DISTINCT) and token == v.count_id:
            return DecoderState(
                ctx, emitted, slot, _AFTER_COUNT,
                form=state.form, distinct=state.distinct, count=True,
            )
        if stage in (_AFTER_SELECT, _AFTER_DISTINCT) and token == v.variable_ids[0]:
            return DecoderState(
                ctx, emitted, slot, _AFTER_PROJ_VAR,
                form=state.form, distinct=state.distinct,
                projection_var=token, open_variables=frozenset({token}),
            )
        if stage == _AFTER_COUNT and token == v.lparen_id:
            return DecoderState(
                ctx, emitted, slot, _AFTER_COUNT_LP,
                form=state.form, distinct=state.distinct, count=True,
            )
        if stage == _AFTER_COUNT_LP and token == v.variable_ids[0]:
            return DecoderState(
                ctx, emitted, slot, _AFTER_COUNT_VAR,
                form=state.form, distinct=state.distinct, count=True,
                projection_var=token, open_variables=frozenset({token}),
            )
        if stage == _AFTER_COUNT_VAR and token == v.rparen_id:
            return DecoderState(
                ctx, emitted, slot, _AFTER_COUNT_RP,
                form=state.form, distinct=state.distinct, count=True,
                projection_var=state.projection_var, open_variables=state.open_variables,
            )
        if stage in (_AFTER_COUNT_RP, _AFTER_PROJ_VAR) and token == v.where_id:
            return DecoderState(
                ctx, emitted, slot, _AFTER_WHERE,
                form=state.form, distinct=state.distinct, count=state.count,
                projection_var=state.projection_var, open_variables=state.open_variables,
            )
        if stage in (_AFTER_WHERE, _AFTER_ASK) and token == v.lbrace_id:
            return DecoderState(
                ctx, emitted, Slot.PATTERN_HEAD, _START,
                form=state.form, distinct=state.distinct, count=state.count,
                projection_var=state.projection_var, open_variables=state.open_variables,
            )
        raise _illegal(state, token)

    if slot is Slot.PATTERN_BOUNDARY:
        if token == v.rbrace_id:
            if not _closure_legal(state):
                raise GrammarError("cannot close block: projection variable unused in patterns")
            return _evolve(state, emitted, slot=Slot.END)
        if state.pattern_count >= ctx.max_patterns:
            raise _illegal(state, token)
        # A head opener begins the next pattern.
        return _advance_entity_slot(state, token, emitted, head=True)

    if slot is Slot.PATTERN_HEAD:
        return _advance_entity_slot(state, token, emitted, head=True)

    if slot is Slot.PATTERN_RELATION:
        if not state.mid_identifier():
            if token != v.lbracket_id:
                raise _illegal(state, token)
            node = ctx.relation_trie.root.children.get(token)
            if node is None:
                raise GrammarError("relation trie is empty")
            return _evolve(
                state, emitted, ident_start=len(state.emitted), trie_node=node
            )
        node = state.trie_node.children.get(token) if state.trie_node else None
        if node is None:
            raise _illegal(state, token)
        if token == v.rbracket_id:
            assert node.terminal_key is not None
            return _evolve(
                state, emitted, slot=Slot.PATTERN_TAIL,
                ident_start=None, trie_node=None, current_relation=node.terminal_key,
            )
        return _evolve(state, emitted, trie_node=node)

    if slot is Slot.PATTERN_TAIL:
        if state.tail_done:
            if token != v.dot_id:
                raise _illegal(state, token)
            return _evolve(
                state, emitted, slot=Slot.PATTERN_BOUNDARY,
                current_head=None, current_relation=None, tail_done=False,
                pattern_count=state.pattern_count + 1,
            )
        return _advance_entity_slot(state, token, emitted, head=False)

    raise _illegal(state, token)  # END


def _advance_entity_slot(
    state: DecoderState, token: int, emitted: tuple[int, ...], head: bool
) -> DecoderState:
    ctx = state.ctx
    v = ctx.vocab
    if not state.mid_identifier():
        if v.is_variable(token):
            if token not in variable_candidates(state):
                raise _illegal(state, token)
            bound = state.projection_bound or token == state.projection_var
            if head:
                return _evolve(
                    state, emitted, slot=Slot.PATTERN_RELATION,
                    current_head=VarRef(token),
                    open_variables=state.open_variables | {token},
                    projection_bound=bound,
                )
            return _evolve(
                state, emitted, tail_done=True,
                open_variables=state.open_variables | {token},
                projection_bound=bound,
            )
        if token == v.lbracket_id:
            node = ctx.entity_trie.root.children.get(token)
            if node is None:
                raise GrammarError("entity trie is empty")
            slot = Slot.PATTERN_HEAD if head else Slot.PATTERN_TAIL
            return _evolve(
                state, emitted, slot=slot,
                ident_start=len(state.emitted), trie_node=node,
            )
        raise _illegal(state, token)
    node = state.trie_node.children.get(token) if state.trie_node else None
    if node is None:
        raise _illegal(state, token)
    if token == v.rbracket_id:
        assert node.terminal_key is not None
        if head:
            return _evolve(
                state, emitted, slot=Slot.PATTERN_RELATION,
                ident_start=None, trie_node=None, current_head=EntRef(node.terminal_key),
            )
        return _evolve(state, emitted, ident_start=None, trie_node=None, tail_done=True)
    return _evolve(state, emitted, trie_node=node)


def _evolve(state: DecoderState, emitted: tuple[int, ...], **changes) -> DecoderState:
    return DecoderState(
        ctx=state.ctx,
        emitted=emitted,
        slot=changes.get("slot", state.slot),
        stage=changes.get("stage", state.stage),
        form=state.form,
        distinct=state.distinct,
        count=state.count,
        projection_var=state.projection_var,
        ident_start=changes.get("ident_start", state.ident_start),
        trie_node=changes.get("trie_node", state.trie_node),
        current_head=changes.get("current_head", state.current_head),
        current_relation=changes.get("current_relation", state.current_relation),
        open_variables=changes.get("open_variables", state.open_variables),
        pattern_count=changes.get("pattern_count", state.pattern_count),
        projection_bound=changes.get("projection_bound", state.projection_bound),
        tail_done=changes.get("tail_done", state.tail_done),
    )


def replay(ctx: GrammarContext, tokens) -> DecoderState:
    """Advance from the initial state through every token."""
    state = initial_state(ctx)
    for tok in tokens:
        state = advance(state, tok)
    return state
