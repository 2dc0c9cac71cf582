"""Beam-search decoding over a pluggable step scorer.

The scorer supplies log-probabilities over the vocabulary; the mask engine
removes disallowed tokens; hypotheses are ranked by cumulative
log-probability with lexicographic token-sequence tie-breaking so results
are reproducible across platforms. No length normalization is applied.

Finished hypotheses retire into a result pool and never occupy beam
slots. Hypotheses whose mask comes back empty are dead; siblings in the
beam are the recovery mechanism.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .grammar import DecoderState, GrammarError, Slot, advance, initial_state
from .mask import MaskMode, TokenMask, allowed_tokens, full_mask
from .vocab import Vocabulary, detokenize, tokenize_text

# Finite stand-in for log(0) in scorer output; masking owns real -inf.
LOG_ZERO = -1.0e9


class DecodeError(ValueError):
    pass


class Scorer(Protocol):
    def score_step(self, question: str, emitted: tuple[int, ...]) -> np.ndarray:
        """Log-probabilities over the vocabulary for the next token."""
        ...


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[int, ...]
    logp: float
    state: DecoderState | None
    finished: bool = False


@dataclass
class DecodeDiagnostics:
    steps: int = 0
    dead_hypotheses: int = 0
    unfinished: list[str] = field(default_factory=list)
    all_finished: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class DecodeResult:
    ranked: list[tuple[str, float]]
    ranked_tokens: list[tuple[int, ...]]
    diagnostics: DecodeDiagnostics

    def queries(self) -> list[str]:
        return [q for q, _ in self.ranked]


class UniformScorer:
    """Equal log-probability on every token."""

    def __init__(self, vocab: Vocabulary, seed: int = 0):
        del seed  # no entropy consumed; accepted for interface symmetry
        self._row = np.full(len(vocab), -np.log(len(vocab)), dtype=np.float64)
        self._row.setflags(write=False)

    def score_step(self, question: str, emitted: tuple[int, ...]) -> np.ndarray:
        return self._row


class NoisyOracleScorer:
    """Oracle for gold queries that errs with probability epsilon per step.

    While the emitted prefix tracks the gold token sequence, the scorer
    puts mass 1 - epsilon on its believed next token and spreads epsilon
    uniformly over the vocabulary; with probability epsilon (seeded,
    deterministic) the believed token is drawn at random instead of the
    gold one, imitating a model confusing similar identifiers. Off the
    gold path the distribution is uniform. epsilon=0 is an exact oracle,
    epsilon=1 is exactly uniform.
    """

    def __init__(
        self,
        gold_map: Mapping[str, str],
        epsilon: float,
        seed: int,
        vocab: Vocabulary,
    ):
        if not 0.0 <= epsilon <= 1.0:
            raise DecodeError(f"epsilon must be in [0, 1], got {epsilon}")
        self.epsilon = epsilon
        self.seed = seed
        self._vocab = vocab
        size = len(vocab)
        # Mixture: believed token gets (1-eps) + eps/V, the rest eps/V.
        hi = (1.0 - epsilon) + epsilon / size
        lo = epsilon / size
        self._hi = float(np.log(hi))
        self._lo = float(np.log(lo)) if lo > 0.0 else LOG_ZERO
        self._uniform = np.full(size, -np.log(size), dtype=np.float64)
        self._uniform.setflags(write=False)
        self._gold: dict[str, tuple[int, ...]] = {}
        for question, query in gold_map.items():
            self._gold[question] = tokenize_text(query, vocab) + (vocab.eos_id,)

    def _believed(self, question: str, position: int, gold_next: int) -> int:
        if self.epsilon == 0.0:
            return gold_next
        digest = hashlib.blake2b(
            f"{self.seed}|{position}|{question}".encode(), digest_size=8
        ).digest()
        rng = random.Random(int.from_bytes(digest, "big"))
        if rng.random() < self.epsilon:
            return rng.randrange(len(self._vocab))
        return gold_next

    def score_step(self, question: str, emitted: tuple[int, ...]) -> np.ndarray:
        gold = self._gold.get(question)
        pos = len(emitted)
        if gold is None or pos >= len(gold) or emitted != gold[:pos]:
            return self._uniform
        target = self._believed(question, pos, gold[pos])
        row = np.full(len(self._vocab), self._lo, dtype=np.float64)
        row[target] = self._hi
        return row


def make_uniform_scorer(vocab: Vocabulary, seed: int = 0) -> UniformScorer:
    return UniformScorer(vocab, seed)


def make_noisy_oracle_scorer(
    gold_map: Mapping[str, str], epsilon: float, seed: int, vocab: Vocabulary
) -> NoisyOracleScorer:
    return NoisyOracleScorer(gold_map, epsilon, seed, vocab)


def decode(
    question: str,
    scorer: Scorer,
    bundle,
    mode: MaskMode = MaskMode.FULL,
    beam_size: int = 10,
    max_len: int = 128,
) -> DecodeResult:
    """Left-to-right beam search under the chosen mask mode.

    Every live hypothesis is expanded with its masked step scores; the top
    ``beam_size`` unfinished candidates continue and every finished
    candidate retires into the pool. Search stops when nothing alive can
    still enter the top ``beam_size`` of the pool, or at ``max_len``.
    Unfinished sequences at the length limit are reported in diagnostics
    only.
    """
    if beam_size < 1:
        raise DecodeError("beam_size must be >= 1")
    if max_len < 1:
        raise DecodeError("max_len must be >= 1")
    vocab = bundle.vocab
    unconstrained = mode is MaskMode.UNCONSTRAINED
    eos = vocab.eos_id

    init_state = None if unconstrained else initial_state(bundle.grammar_ctx)
    init_mask = _mask_for(init_state, mode, bundle)
    if not init_mask.allowed:
        raise DecodeError("initial mask is empty: unusable configuration")

    diag = DecodeDiagnostics()
    live: list[Hypothesis] = [Hypothesis((), 0.0, init_state)]
    pool: list[tuple[float, tuple[int, ...], DecoderState | None]] = []

    for _ in range(max_len):
        if not live:
            break
        if len(pool) >= beam_size:
            kth = sorted(pool, key=lambda p: (-p[0], p[1]))[beam_size - 1][0]
            best_live = max(h.logp for h in live)
            if kth > best_live:
                break

        candidates: list[tuple[float, tuple[int, ...], Hypothesis, int]] = []
        for hyp in live:
            mask = _mask_for(hyp.state, mode, bundle)
            toks = mask.sorted_tokens()
            if not toks:
                diag.dead_hypotheses += 1
                continue
            scores = scorer.score_step(question, hyp.tokens)
            for t in toks:
                candidates.append((hyp.logp + float(scores[t]), hyp.tokens + (t,), hyp, t))
        if not candidates:
            break
        diag.steps += 1
        candidates.sort(key=lambda c: (-c[0], c[1]))

        new_live: list[Hypothesis] = []
        for logp, toks, hyp, t in candidates:
            if unconstrained:
                if t == eos:
                    pool.append((logp, toks, None))
                    diag.all_finished.append(toks)
                elif len(new_live) < beam_size:
                    new_live.append(Hypothesis(toks, logp, None))
            else:
                state2 = advance(hyp.state, t)
                if state2.slot is Slot.END:
                    pool.append((logp, toks, state2))
                    diag.all_finished.append(toks)
                elif len(new_live) < beam_size:
                    new_live.append(Hypothesis(toks, logp, state2))
        live = new_live

    for hyp in live:
        diag.unfinished.append(detokenize(hyp.tokens, vocab))

    pool.sort(key=lambda p: (-p[0], p[1]))
    top = pool[:beam_size]
    return DecodeResult(
        ranked=[(detokenize(toks, vocab), logp) for logp, toks, _ in top],
        ranked_tokens=[toks for _, toks, _ in top],
        diagnostics=diag,
    )


def batch_decode(
    questions: Sequence[str],
    scorer: Scorer,
    bundle,
    mode: MaskMode = MaskMode.FULL,
    beam_size: int = 10,
    max_len: int = 128,
) -> list[DecodeResult | DecodeError]:
    """Decode each question; per-question failures do not abort the batch.

    Questions are independent, so results are exactly those of sequential
    calls. The toy scorers evaluate one step in microseconds and gain
    nothing from joint evaluation, so no cross-question batching of scorer
    calls is attempted.
    """
    out: list[DecodeResult | DecodeError] = []
    for q in questions:
        try:
            out.append(decode(q, scorer, bundle, mode, beam_size, max_len))
        except DecodeError as exc:
            out.append(exc)
    return out


def _mask_for(state: DecoderState | None, mode: MaskMode, bundle) -> TokenMask:
    if mode is MaskMode.UNCONSTRAINED:
        return full_mask(len(bundle.vocab))
    assert state is not None
    return allowed_tokens(
        state,
        mode,
        bundle.graph,
        bundle.tries,
        bundle.vocab,
        strict_tails=bundle.strict_tails,
    )


def replay_logp(
    question: str,
    tokens: Sequence[int],
    scorer: Scorer,
    bundle,
    mode: MaskMode = MaskMode.FULL,
) -> float:
    """Recompute the cumulative masked log-probability of a token sequence.

    Used by tests to verify score bookkeeping; raises GrammarError if the
    sequence is not accepted under the mode's masks.
    """
    unconstrained = mode is MaskMode.UNCONSTRAINED
    state = None if unconstrained else initial_state(bundle.grammar_ctx)
    total = 0.0
    emitted: tuple[int, ...] = ()
    for t in tokens:
        mask = _mask_for(state, mode, bundle)
        if t not in mask:
            raise GrammarError(f"token {t} masked out during replay at position {len(emitted)}")
        scores = scorer.score_step(question, emitted)
        total += float(scores[t])
        emitted = emitted + (t,)
        if not unconstrained:
            state = advance(state, t)
    return total
