"""Command-line front end.

Machine-readable output goes to stdout (JSON lines or CSV); progress and
warnings go to stderr. All randomness flows from --seed. The decode
command can run against a local index or act as a thin client of a
running service via --server.
"""

from __future__ import annotations

import json

import click

from . import beam as beam_mod
from .engine import Engine, build_bundle
from .evaluation import (
    DatasetItem,
    beam_sweep,
    load_dataset,
    make_scorer,
)
from .executor import answer
from .identifiers import load_labels_file
from .index_io import load_bundle, save_bundle
from .kg import load_triples_file
from .mask import MaskMode


def _log(message: str) -> None:
    click.echo(message, err=True)


def _expand_iris(query: str, bundle) -> str:
    """Rewrite bracketed identifiers back to their raw keys for display."""
    out = query
    for table in (bundle.entity_table, bundle.relation_table):
        for ident in table.identifiers():
            out = out.replace(ident.surface, ident.subject_key)
    return out


mode_option = click.option(
    "--mode",
    type=click.Choice([m.value for m in MaskMode]),
    default="full",
    show_default=True,
)
scorer_option = click.option(
    "--scorer", default="uniform", show_default=True,
    help="'uniform' or 'noisy-oracle:EPS'",
)


@click.group()
def main():
    """Constrained natural-language-to-SPARQL decoding over a knowledge graph."""


@main.command("build-index")
@click.argument("triples_path", type=click.Path(exists=True))
@click.argument("labels_path", type=click.Path(exists=True))
@click.option("-o", "--out", "out_path", required=True, type=click.Path())
@click.option("--max-patterns", default=4, show_default=True)
@click.option("--strict-tails", is_flag=True, default=False)
def cmd_build_index(triples_path, labels_path, out_path, max_patterns, strict_tails):
    """Build graph indices and identifier tries, then serialize them."""
    triples = load_triples_file(triples_path)
    labels = load_labels_file(labels_path)
    bundle = build_bundle(
        triples, labels, max_patterns=max_patterns, strict_tails=strict_tails
    )
    save_bundle(bundle, out_path)
    click.echo(
        json.dumps(
            {
                "index": out_path,
                "entities": len(bundle.graph.entities),
                "relations": len(bundle.graph.relations),
                "triples": len(bundle.graph.triples),
            }
        )
    )


@main.command("decode")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.argument("questions", nargs=-1)
@click.option("--batch", "batch_path", type=click.Path(exists=True), help="questions file, one per line")
@mode_option
@click.option("--beam", default=10, show_default=True)
@click.option("--max-len", default=128, show_default=True)
@scorer_option
@click.option("--seed", default=0, show_default=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True),
              help="dataset supplying gold queries for oracle scorers")
@click.option("--expand-iris", is_flag=True, default=False)
@click.option("--server", "server_url", default=None, help="route decoding through a running service")
def cmd_decode(index_path, questions, batch_path, mode, beam, max_len, scorer,
               seed, dataset_path, expand_iris, server_url):
    """Decode questions and print ranked queries plus the chosen answer."""
    question_list = list(questions)
    if batch_path:
        with open(batch_path, encoding="utf-8") as fh:
            question_list.extend(line.strip() for line in fh if line.strip())
    if not question_list:
        return

    if server_url:
        _decode_via_server(server_url, question_list, mode, beam, max_len, scorer, seed)
        return

    bundle = load_bundle(index_path)
    items = load_dataset(dataset_path) if dataset_path else []
    gold_items = [it for it in items if it.question in set(question_list)]
    scorer_obj = make_scorer(scorer, gold_items, seed, bundle.vocab)

    mode_enum = MaskMode.parse(mode)
    for question in question_list:
        try:
            result = beam_mod.decode(question, scorer_obj, bundle, mode_enum, beam, max_len)
        except beam_mod.DecodeError as exc:
            click.echo(json.dumps({"question": question, "error": str(exc)}))
            continue
        picked = answer(result, bundle)
        display = [
            {"query": _expand_iris(q, bundle) if expand_iris else q, "logp": lp}
            for q, lp in result.ranked
        ]
        payload = {
            "question": question,
            "ranked": display,
            "answer": None,
        }
        if picked is not None:
            result_set, rank = picked
            payload["answer"] = {
                "kind": result_set.kind,
                "value": sorted(result_set.answer_set()),
                "rank": rank,
            }
        click.echo(json.dumps(payload))


def _decode_via_server(server_url, question_list, mode, beam, max_len, scorer, seed):
    import httpx

    resp = httpx.post(
        server_url.rstrip("/") + "/decode",
        json={
            "questions": question_list,
            "mode": mode,
            "beam_size": beam,
            "max_len": max_len,
            "scorer": scorer,
            "seed": seed,
        },
        timeout=300.0,
    )
    resp.raise_for_status()
    for item in resp.json()["results"]:
        click.echo(json.dumps(item))


@main.command("eval")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--modes", default="full,no-pruning,unconstrained", show_default=True)
@click.option("--beams", default="1,5,10", show_default=True)
@scorer_option
@click.option("--seed", default=0, show_default=True)
@click.option("--max-len", default=128, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--plot", "plot_path", type=click.Path(), default=None)
@click.option("--reps", default=3, show_default=True, help="timing repetitions per cell")
@click.option("--no-timing", is_flag=True, default=False,
              help="zero the timing column for byte-reproducible reports")
def cmd_eval(index_path, dataset_path, modes, beams, scorer, seed, max_len,
             report_path, plot_path, reps, no_timing):
    """Run the ablation/beam sweep and write the report table."""
    bundle = load_bundle(index_path)
    items = load_dataset(dataset_path)
    mode_list = [MaskMode.parse(m.strip()) for m in modes.split(",") if m.strip()]
    beam_list = [int(b) for b in beams.split(",") if b.strip()]

    report = beam_sweep(
        items, bundle, scorer, mode_list, beam_list,
        seed=seed, max_len=max_len, measure_time=not no_timing, reps=reps,
    )
    if report.skipped:
        _log(f"warning: skipped {report.skipped} items with no gold answers")
    for row in report.rows:
        _log(
            f"mode={row.mode} beam={row.beam} f1={row.f1:.3f} hits1={row.hits1:.3f} "
            f"inexec={row.inexec_rate:.3f} inexec_all={row.inexec_rate_all:.3f} "
            f"mean_ms={row.mean_ms:.2f}"
        )
    csv_text = report.to_csv()
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        _log(f"report written to {report_path}")
    else:
        click.echo(csv_text, nl=False)
    if plot_path:
        _write_plot(report, plot_path)
        _log(f"plot written to {plot_path}")


def _write_plot(report, plot_path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        _log("matplotlib not installed; skipping plot")
        return
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    modes = sorted({r.mode for r in report.rows})
    for mode in modes:
        rows = sorted((r for r in report.rows if r.mode == mode), key=lambda r: r.beam)
        ax1.plot([r.beam for r in rows], [r.f1 for r in rows], marker="o", label=mode)
        ax2.plot([r.beam for r in rows], [r.inexec_rate for r in rows], marker="o", label=mode)
    ax1.set_xlabel("beam size"), ax1.set_ylabel("F1"), ax1.legend()
    ax2.set_xlabel("beam size"), ax2.set_ylabel("inexecutable rate"), ax2.legend()
    fig.tight_layout()
    fig.savefig(plot_path)
    plt.close(fig)


@main.command("swap-demo")
@click.option("--index-t0", required=True, type=click.Path(exists=True))
@click.option("--index-t1", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True),
              help="delta dataset answerable only on the evolved graph")
@click.option("--scorer", default="noisy-oracle:0", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--beam", default=5, show_default=True)
@click.option("--max-len", default=128, show_default=True)
def cmd_swap_demo(index_t0, index_t1, dataset_path, scorer, seed, beam, max_len):
    """Decode delta questions before and after a knowledge-base swap."""
    engine = Engine(load_bundle(index_t0))
    items = load_dataset(dataset_path)
    scorer_obj = make_scorer(scorer, items, seed, engine.bundle.vocab)
    mode = MaskMode.FULL

    def run(item: DatasetItem):
        """(gold query produced and answered with gold answers?, answers)."""
        result = engine.decode(item.question, scorer_obj, mode, beam, max_len)
        produced = any(q == item.gold_query for q, _ in result.ranked)
        picked = engine.answer(result)
        answers = sorted(picked[0].answer_set()) if picked else None
        return produced and answers == sorted(item.gold_answers), answers

    before = {}
    for it in items:
        before[it.question] = run(it)
    engine.swap(load_bundle(index_t1, vocab=engine.bundle.vocab))
    after = {}
    for it in items:
        after[it.question] = run(it)

    transitions = 0
    for it in items:
        answered_before, answers_before = before[it.question]
        answered_after, answers_after = after[it.question]
        transition = answered_after and not answered_before
        transitions += transition
        click.echo(
            json.dumps(
                {
                    "question": it.question,
                    "gold": sorted(it.gold_answers),
                    "before": answers_before,
                    "after": answers_after,
                    "answered_before": answered_before,
                    "answered_after": answered_after,
                    "transition": transition,
                }
            )
        )
    _log(f"{transitions}/{len(items)} questions became answerable after the swap")


@main.command("gen-fixtures")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--entities", default=12, show_default=True)
@click.option("--relations", default=3, show_default=True)
@click.option("--density", default=2.0, show_default=True)
@click.option("--one-hop", default=4, show_default=True)
@click.option("--two-hop", default=0, show_default=True)
@click.option("--count-questions", default=0, show_default=True)
@click.option("--ask-questions", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--evolution", is_flag=True, default=False,
              help="also emit an evolved graph and delta dataset")
def cmd_gen_fixtures(out_dir, entities, relations, density, one_hop, two_hop,
                     count_questions, ask_questions, seed, evolution):
    """Generate a synthetic graph, labels and dataset with exact ground truth."""
    import os

    from .evaluation import write_dataset
    from .fixtures import FixtureSpec, QuestionMix, generate, kb_evolution_pair

    spec = FixtureSpec(
        entities=entities,
        relations=relations,
        density=density,
        mix=QuestionMix(one_hop=one_hop, two_hop=two_hop,
                        count=count_questions, ask=ask_questions),
        seed=seed,
    )
    if evolution:
        pair = kb_evolution_pair(spec)
        paths = pair.t0.write_files(os.path.join(out_dir, "t0"))
        paths_t1 = pair.t1.write_files(os.path.join(out_dir, "t1"))
        delta_path = os.path.join(out_dir, "delta.tsv")
        write_dataset(delta_path, pair.delta_items)
        click.echo(json.dumps({"t0": paths, "t1": paths_t1, "delta": delta_path}))
    else:
        fixture = generate(spec)
        paths = fixture.write_files(out_dir)
        click.echo(json.dumps(paths))


@main.command("serve")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def cmd_serve(index_path, host, port):
    """Run the decoding service."""
    import uvicorn

    from .service.app import create_app

    engine = Engine(load_bundle(index_path))
    _log(f"serving index {index_path} on {host}:{port}")
    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
