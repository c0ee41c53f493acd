"""Command-line surface: run, corrupt, eval, report.

Exit codes: 0 success, 2 partial failures (some runs or items failed),
1 hard error (bad inputs, unreadable files, missing gateway).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .batch import (
    ExperimentSpec,
    aggregate_report,
    emit_report,
    evaluate_task,
    run_experiment_batch,
)
from .corruption import CorruptionPolicy, apply_plan, load_bank, sample_plan
from .core import parse_pathway, state_to_pathway
from .errors import HypgameError
from .evaluation import Lexicon
from .gateway import HttpGateway
from .serialize import read_json, read_jsonl, write_json, write_jsonl


@click.group()
def main():
    """Hypothesis refinement game harness."""


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_pathway_records(path: str) -> list[dict]:
    p = Path(path)
    if p.suffix == ".jsonl":
        return list(read_jsonl(p))
    record = read_json(p)
    return record if isinstance(record, list) else [record]


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--concurrency", default=1, show_default=True, type=int)
@click.option("--score", is_flag=True, default=False,
              help="Append per-round score vectors to trajectory files "
                   "(requires inputs.lexicon in the spec file).")
def run(spec_path: str, concurrency: int, score: bool):
    """Run an experiment batch described by a spec file."""
    try:
        spec = ExperimentSpec.load(spec_path)
        if score and not spec.score:
            import dataclasses

            spec = dataclasses.replace(spec, score=True)
        gateway = None
        needs_gateway = spec.method != "hypothesis_game" or (
            (spec.controller or {}).get("kind", "policy") == "gateway"
        )
        if needs_gateway:
            gateway = HttpGateway()
        result = run_experiment_batch(spec, gateway=gateway, concurrency=concurrency)
    except HypgameError as exc:
        _fail(str(exc))
    click.echo(
        f"completed={result.completed} skipped={result.skipped} failed={result.failed} "
        f"out={result.out_dir}"
    )
    if result.failed:
        sys.exit(2)


@main.command()
@click.option("--bank", "bank_path", required=True, type=click.Path(exists=True))
@click.option("--pathway", "pathway_path", required=True, type=click.Path(exists=True))
@click.option("--error-type", required=True,
              type=click.Choice(["wrong_entity", "wrong_relation", "unsupported_step", "mixed"]))
@click.option("--difficulty", required=True, type=click.Choice(["L1", "L2"]))
@click.option("--fraction", required=True, type=float)
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--lexicon", "lexicon_path", default=None, type=click.Path(exists=True),
              help="Validate bank entries against this lexicon.")
def corrupt(bank_path, pathway_path, error_type, difficulty, fraction, seed, out_dir, lexicon_path):
    """Sample and apply a corruption plan to one or more pathways."""
    try:
        lexicon = Lexicon.load(lexicon_path) if lexicon_path else None
        bank = load_bank(bank_path, lexicon=lexicon)
        records = _load_pathway_records(pathway_path)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        corrupted_records = []
        for record in records:
            pathway = parse_pathway(record)
            policy = CorruptionPolicy(
                error_type=error_type, difficulty=difficulty, fraction=fraction, seed=seed
            )
            plan = sample_plan(pathway, bank, policy)
            corrupted, applied = apply_plan(pathway, plan)
            corrupted_record = state_to_pathway(corrupted)
            corrupted_records.append(corrupted_record)

            slug = "".join(c if c.isalnum() else "-" for c in record["name"].lower()).strip("-")
            write_json(out / f"{slug}.corrupted.json", corrupted_record)
            write_json(
                out / f"{slug}.plan.json",
                {
                    **plan.to_dict(),
                    "applied": [a.to_dict() for a in applied],
                    "original": record,
                    "corrupted": corrupted_record,
                },
            )
            click.echo(f"{record['name']}: {len(applied)} corruption(s) applied")
        write_jsonl(out / "corrupted_pathways.jsonl", corrupted_records)
    except HypgameError as exc:
        _fail(str(exc))


@main.command()
@click.option("--task", required=True, type=click.Choice(["corruption", "reconstruction"]))
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True))
@click.option("--gen", "gen_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--judge", "judge_kind", default="rule", show_default=True,
              type=click.Choice(["rule", "gateway"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
def eval(task, ref_path, gen_path, lexicon_path, judge_kind, out_dir):
    """Score generated outputs against references."""
    try:
        gateway = HttpGateway() if judge_kind == "gateway" else None
        rows, verdicts = evaluate_task(
            task, ref_path, gen_path, lexicon_path,
            judge_kind=judge_kind, gateway=gateway, out_dir=out_dir,
        )
    except HypgameError as exc:
        _fail(str(exc))
    click.echo(f"evaluated {len(rows)} output(s), {len(verdicts)} verdict(s) -> {out_dir}")


@main.command()
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--resamples", default=10_000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def report(results_dir, out_dir, resamples, seed):
    """Aggregate metric rows into means with bootstrap confidence intervals."""
    try:
        rep = aggregate_report(results_dir, n_resamples=resamples, seed=seed)
        files = emit_report(rep, out_dir)
    except HypgameError as exc:
        _fail(str(exc))
    click.echo(f"wrote {len(files)} file(s) to {out_dir}")


if __name__ == "__main__":
    main()
