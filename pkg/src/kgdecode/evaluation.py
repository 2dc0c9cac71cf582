"""Answer-set metrics and the decode-and-measure harness.

Inexecutable means: fails to parse, or references a triple pattern the
graph's connectivity does not admit. The headline rate is over the top-1
candidate; an all-candidates variant (no candidate executable) is
reported alongside since either convention appears in the literature.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import beam as beam_mod
from .executor import ParseError, ResultSet, answer, parse_query, connectivity_ok, execute
from .mask import MaskMode


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetItem:
    question: str
    gold_query: str
    gold_answers: frozenset[str]


@dataclass
class EvalRecord:
    question: str
    gold_answers: frozenset[str]
    predicted: ResultSet | None
    executable: bool
    top1_executable: bool
    chosen_rank: int | None
    f1: float
    hits1: int
    error: str | None = None


def f1(pred: Iterable[str], gold: Iterable[str]) -> float:
    """Harmonic mean of answer-set precision and recall; 0 for empty pred."""
    pred_s, gold_s = set(pred), set(gold)
    if not pred_s or not gold_s:
        return 0.0
    inter = len(pred_s & gold_s)
    if inter == 0:
        return 0.0
    p = inter / len(pred_s)
    r = inter / len(gold_s)
    return 2 * p * r / (p + r)


def hits_at_1(first_answer: Iterable[str] | None, gold: Iterable[str]) -> int:
    """1 when the first returned answer set intersects gold, else 0."""
    if first_answer is None:
        return 0
    return 1 if set(first_answer) & set(gold) else 0


def inexecutable_rate(records: Sequence[EvalRecord]) -> float:
    """Fraction whose top-1 candidate is missing or inexecutable."""
    if not records:
        raise EvalError("inexecutable_rate over an empty record list")
    return sum(1 for r in records if not r.top1_executable) / len(records)


def inexecutable_rate_all(records: Sequence[EvalRecord]) -> float:
    """Fraction with no executable candidate at any rank."""
    if not records:
        raise EvalError("inexecutable_rate over an empty record list")
    return sum(1 for r in records if not r.executable) / len(records)


def evaluate_decode(item: DatasetItem, result, bundle) -> EvalRecord:
    """Score one decode result against its gold answers."""
    checks = []
    for query, _ in result.ranked:
        try:
            ast = parse_query(query, bundle.entity_table, bundle.relation_table)
        except ParseError:
            checks.append(False)
            continue
        checks.append(connectivity_ok(ast, bundle.graph))
    top1_ok = bool(checks) and checks[0]
    any_ok = any(checks)

    picked = answer(result, bundle)
    predicted = picked[0] if picked else None
    rank = picked[1] if picked else None
    pred_set = predicted.answer_set() if predicted else None
    return EvalRecord(
        question=item.question,
        gold_answers=item.gold_answers,
        predicted=predicted,
        executable=any_ok,
        top1_executable=top1_ok,
        chosen_rank=rank,
        f1=f1(pred_set or (), item.gold_answers),
        hits1=hits_at_1(pred_set, item.gold_answers),
    )


def run_eval(
    items: Sequence[DatasetItem],
    bundle,
    scorer,
    mode: MaskMode,
    beam_size: int,
    max_len: int = 128,
) -> list[EvalRecord]:
    """Decode and score every item; per-item errors land in the record."""
    records = []
    for item in items:
        try:
            result = beam_mod.decode(item.question, scorer, bundle, mode, beam_size, max_len)
        except beam_mod.DecodeError as exc:
            records.append(
                EvalRecord(
                    question=item.question,
                    gold_answers=item.gold_answers,
                    predicted=None,
                    executable=False,
                    top1_executable=False,
                    chosen_rank=None,
                    f1=0.0,
                    hits1=0,
                    error=str(exc),
                )
            )
            continue
        records.append(evaluate_decode(item, result, bundle))
    return records


@dataclass
class SweepRow:
    mode: str
    beam: int
    f1: float
    hits1: float
    inexec_rate: float
    inexec_rate_all: float
    mean_ms: float


@dataclass
class SweepReport:
    rows: list[SweepRow] = field(default_factory=list)
    skipped: int = 0

    def to_csv(self) -> str:
        """Canonical report table: one row per (mode, beam) cell."""
        lines = ["mode,beam,f1,hits1,inexec_rate,mean_ms"]
        for r in self.rows:
            lines.append(
                f"{r.mode},{r.beam},{r.f1:.6f},{r.hits1:.6f},{r.inexec_rate:.6f},{r.mean_ms:.3f}"
            )
        return "\n".join(lines) + "\n"


def make_scorer(spec: str, items: Sequence[DatasetItem], seed: int, vocab):
    """Build a scorer from its CLI spec: 'uniform' or 'noisy-oracle:EPS'."""
    if spec == "uniform":
        return beam_mod.make_uniform_scorer(vocab, seed)
    if spec.startswith("noisy-oracle"):
        _, _, eps_text = spec.partition(":")
        epsilon = float(eps_text) if eps_text else 0.0
        gold_map = {it.question: it.gold_query for it in items}
        return beam_mod.make_noisy_oracle_scorer(gold_map, epsilon, seed, vocab)
    raise EvalError(f"unknown scorer spec {spec!r}")


def beam_sweep(
    items: Sequence[DatasetItem],
    bundle,
    scorer_spec: str,
    modes: Sequence[MaskMode],
    beams: Sequence[int],
    *,
    seed: int = 0,
    max_len: int = 128,
    measure_time: bool = True,
    reps: int = 3,
) -> SweepReport:
    """Run the decode+answer+metric pipeline per (mode, beam) cell.

    Items whose gold answer set is empty are skipped with a count. Timing
    is the median over ``reps`` repeated passes; with ``measure_time``
    off the column is zero so reruns produce identical bytes.
    """
    usable = [it for it in items if it.gold_answers]
    report = SweepReport(skipped=len(items) - len(usable))
    scorer = make_scorer(scorer_spec, usable, seed, bundle.vocab)
    for mode in modes:
        for beam_size in beams:
            records = run_eval(usable, bundle, scorer, mode, beam_size, max_len)
            mean_ms = 0.0
            if measure_time and usable:
                samples = []
                for _ in range(max(1, reps)):
                    t0 = time.perf_counter()
                    for item in usable:
                        try:
                            beam_mod.decode(item.question, scorer, bundle, mode, beam_size, max_len)
                        except beam_mod.DecodeError:
                            pass
                    samples.append((time.perf_counter() - t0) * 1000 / len(usable))
                samples.sort()
                mean_ms = samples[len(samples) // 2]
            n = len(records) or 1
            report.rows.append(
                SweepRow(
                    mode=mode.value,
                    beam=beam_size,
                    f1=sum(r.f1 for r in records) / n,
                    hits1=sum(r.hits1 for r in records) / n,
                    inexec_rate=inexecutable_rate(records) if records else 0.0,
                    inexec_rate_all=inexecutable_rate_all(records) if records else 0.0,
                    mean_ms=mean_ms,
                )
            )
    return report


def load_dataset(path: str) -> list[DatasetItem]:
    """Read 'question<TAB>gold query<TAB>answer;answer;...' lines."""
    items: list[DatasetItem] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise EvalError(f"{path}:{lineno}: expected 3 tab-separated fields")
            answers = frozenset(a.strip() for a in fields[2].split(";") if a.strip())
            items.append(DatasetItem(fields[0].strip(), fields[1].strip(), answers))
    return items


def write_dataset(path: str, items: Iterable[DatasetItem]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            fh.write(f"{it.question}\t{it.gold_query}\t{';'.join(sorted(it.gold_answers))}\n")


def gold_result(item: DatasetItem, bundle) -> ResultSet:
    """Execute an item's gold query; used by generators for self-checks."""
    ast = parse_query(item.gold_query, bundle.entity_table, bundle.relation_table)
    return execute(ast, bundle.graph)
