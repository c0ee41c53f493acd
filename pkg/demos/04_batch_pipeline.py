"""Walkthrough: the full benchmark loop in one script.

corrupt -> run a batch of games -> evaluate outputs -> aggregate a report.
Identical to what the `hypgame` CLI does, driven here through the library
API with a scripted controller so everything is offline and reproducible.
Files land in a temporary directory printed at the end.
"""

import tempfile
from pathlib import Path

from hypgame import parse_pathway
from hypgame.batch import (
    ExperimentSpec,
    aggregate_report,
    emit_report,
    evaluate_task,
    run_experiment_batch,
)
from hypgame.corruption import (
    CorruptionBank,
    CorruptionEntry,
    CorruptionPolicy,
    apply_plan,
    sample_plan,
)
from hypgame.serialize import write_json, write_jsonl

workdir = Path(tempfile.mkdtemp(prefix="hypgame-demo-"))

# --- 1. Corrupt a reference pathway. ------------------------------------------

record = {
    "name": "demo kinase cascade",
    "steps": [
        "Kinase K1 phosphorylates kinase K2",
        "Kinase K2 phosphorylates kinase K3",
        "Kinase K3 activates factor F1",
        "Factor F1 enters the nucleus",
        "Factor F1 switches on the target genes",
    ],
}
pathway = parse_pathway(record)
bank = CorruptionBank([
    CorruptionEntry(
        pathway_id=record["name"], anchor_index=1,
        error_type="wrong_relation", difficulty="L1", operation="replace",
        original="Kinase K2 phosphorylates kinase K3",
        corrupted="Kinase K2 dephosphorylates kinase K3",
    ),
    CorruptionEntry(
        pathway_id=record["name"], anchor_index=3,
        error_type="wrong_relation", difficulty="L1", operation="replace",
        original="Factor F1 enters the nucleus",
        corrupted="Factor F1 exits the nucleus",
    ),
])
policy = CorruptionPolicy(error_type="wrong_relation", difficulty="L1",
                          fraction=0.3, seed=12)
plan = sample_plan(pathway, bank, policy)
corrupted, applied = apply_plan(pathway, plan)
print(f"injected {len(applied)} corruption(s) into {record['name']!r}")

pathways_file = workdir / "corrupted_pathways.jsonl"
write_jsonl(pathways_file, [{"name": corrupted.pathway_name, "steps": corrupted.texts()}])
bundle_file = workdir / "demo.plan.json"
write_json(bundle_file, {
    **plan.to_dict(),
    "applied": [a.to_dict() for a in applied],
    "original": record,
    "corrupted": {"name": corrupted.pathway_name, "steps": corrupted.texts()},
})

lexicon_file = workdir / "lexicon.jsonl"
write_jsonl(lexicon_file, [
    {"surface": s, "canonical": s, "kind": "gene"}
    for s in ("K1", "K2", "K3", "F1")
])

# --- 2. Run a batch: scripted repairs of both corrupted steps. ----------------

# The scripted controller drops each corrupted statement; a real experiment
# would use the policy or gateway controller instead ("kind": "policy" /
# "kind": "gateway").
spec = ExperimentSpec.from_dict({
    "task": "corruption",
    "method": "hypothesis_game",
    "inputs": {"pathways": str(pathways_file), "lexicon": str(lexicon_file)},
    "out_dir": str(workdir / "results"),
    "seeds": [0],
    "game": {
        "mode": {
            "name": "validation-demo",
            "allowed": ["prune", "expand_corpus", "expand_introspection", "debate"],
            "weights": {"prune": 1.0, "debate": 1.0,
                        "expand_corpus": 0.5, "expand_introspection": 0.5},
        },
        "budget": {"k_max": 4},
        "max_rounds": 2,
        "seed": 0,
        "variant": "simple",
        "task_goal": "remove the injected errors",
    },
    "controller": {"kind": "scripted", "plan": [[
        {"move": "prune", "instruction": "remove the dephosphorylation claim",
         "target_region": ["s1"]},
        {"move": "prune", "instruction": "remove the nuclear-exit claim",
         "target_region": ["s3"]},
    ]]},
    "score": True,
})
result = run_experiment_batch(spec)
print(f"batch: completed={result.completed} skipped={result.skipped} "
      f"failed={result.failed}")

# Rerunning the same spec is a no-op thanks to the manifest.
rerun = run_experiment_batch(spec)
print(f"rerun: completed={rerun.completed} skipped={rerun.skipped} (resume works)")

# --- 3. Evaluate with the offline rule judge. ----------------------------------

rows, verdicts = evaluate_task(
    "corruption", bundle_file, workdir / "results", lexicon_file,
    judge_kind="rule", out_dir=workdir / "eval",
)
row = rows[0]
print(f"\nerror removal rate: {row['error_removal_rate']:.2f}")
print(f"entity precision:   {row['precision']:.2f}")
print(f"entity recall:      {row['recall']:.2f}")

# --- 4. Aggregate into a report with bootstrap confidence intervals. -----------

report = aggregate_report(workdir / "eval", n_resamples=2000, seed=0)
emit_report(report, workdir / "report")
print("\naggregates:")
for agg in report.aggregates:
    print(f"  {agg['method']:>16s} {agg['metric']:<20s} "
          f"mean={agg['mean']:.3f} ci=[{agg['ci_low']:.3f}, {agg['ci_high']:.3f}]")

print(f"\nall artifacts under {workdir}")
