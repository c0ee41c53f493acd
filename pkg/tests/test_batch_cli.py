import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from hypgame import MockGateway, parse_pathway
from hypgame.batch import (
    ExperimentSpec,
    MetricReport,
    aggregate_report,
    bootstrap_ci,
    emit_report,
    evaluate_task,
    parse_generated_pathway,
    run_experiment_batch,
)
from hypgame.cli import main as cli_main
from hypgame.corruption import CorruptionPolicy, apply_plan, sample_plan
from hypgame.errors import EvalError, SpecError
from hypgame.serialize import read_json, read_jsonl, write_json, write_jsonl

DATA = Path(__file__).parent / "data"


def scripted_game_spec(pathways_path: Path, out_dir: Path, plan, score=False, inputs=None):
    base_inputs = {"pathways": str(pathways_path)}
    base_inputs.update(inputs or {})
    return ExperimentSpec.from_dict(
        {
            "task": "corruption",
            "method": "hypothesis_game",
            "inputs": base_inputs,
            "out_dir": str(out_dir),
            "seeds": [0],
            "game": {
                "mode": {
                    "name": "uniform",
                    "allowed": ["prune", "expand_corpus", "expand_introspection", "debate"],
                    "weights": {"prune": 1.0, "expand_corpus": 1.0,
                                "expand_introspection": 1.0, "debate": 1.0},
                },
                "budget": {"k_max": 4},
                "max_rounds": 2,
                "seed": 0,
                "variant": "simple",
                "task_goal": "repair the corrupted pathway",
            },
            "controller": {"kind": "scripted", "plan": plan},
            "score": score,
        }
    )


@pytest.fixture()
def corrupted_inputs(tmp_path, mito_record, mito_bank):
    """Corrupt the fixture pathway and stage run inputs plus eval references."""
    pathway = parse_pathway(mito_record)
    policy = CorruptionPolicy(error_type="wrong_relation", difficulty="L2",
                              fraction=0.3, seed=5)
    plan = sample_plan(pathway, mito_bank, policy)
    corrupted, applied = apply_plan(pathway, plan)
    corrupted_record = {"name": corrupted.pathway_name, "steps": corrupted.texts()}
    pathways = tmp_path / "corrupted_pathways.jsonl"
    write_jsonl(pathways, [corrupted_record])
    bundle = {
        **plan.to_dict(),
        "applied": [a.to_dict() for a in applied],
        "original": mito_record,
        "corrupted": corrupted_record,
    }
    bundle_path = tmp_path / "mito.plan.json"
    write_json(bundle_path, bundle)
    return pathways, bundle_path, applied


class TestSpec:
    def test_game_config_required_for_game_method(self, tmp_path):
        with pytest.raises(SpecError, match="game config"):
            ExperimentSpec(
                task="corruption", method="hypothesis_game",
                inputs={"pathways": "x"}, out_dir=str(tmp_path), seeds=(0,),
            )

    def test_unknown_method_rejected(self, tmp_path):
        with pytest.raises(SpecError, match="unknown method"):
            ExperimentSpec(task="corruption", method="magic",
                           inputs={"pathways": "x"}, out_dir=str(tmp_path))

    def test_hash_stable(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        spec = scripted_game_spec(pathways, tmp_path / "r", plan=[])
        assert spec.hash() == ExperimentSpec.from_dict(spec.to_dict()).hash()


class TestBatchRunner:
    def test_scripted_batch_produces_expected_files(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        plan = [[{"move": "prune", "instruction": "drop the first step",
                  "target_region": ["s0"]}]]
        spec = scripted_game_spec(pathways, tmp_path / "results", plan)
        result = run_experiment_batch(spec)
        assert result.completed == 1 and result.failed == 0
        files = sorted(p.name for p in result.out_dir.iterdir())
        assert files == [
            "hypothesis_game--mitochondrial-protein-import--s0.output.json",
            "hypothesis_game--mitochondrial-protein-import--s0.trajectory.jsonl",
            "manifest.json",
        ]
        output = read_json(result.out_dir / files[0])
        assert output["pathway_id"] == "mitochondrial protein import"
        assert len(output["final"]["steps"]) == 12

    def test_rerun_skips_completed(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        spec = scripted_game_spec(pathways, tmp_path / "results", plan=[])
        first = run_experiment_batch(spec)
        second = run_experiment_batch(spec)
        assert first.completed == 1
        assert second.completed == 0 and second.skipped == 1

    def test_byte_identical_reruns_excluding_manifest(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        plan = [[{"move": "prune", "instruction": "drop the first step",
                  "target_region": ["s0"]}]]
        spec = scripted_game_spec(pathways, tmp_path / "a", plan)
        run_experiment_batch(spec)
        run_experiment_batch(spec, out_dir=tmp_path / "b")
        names_a = sorted(p.name for p in (tmp_path / "a").iterdir())
        names_b = sorted(p.name for p in (tmp_path / "b").iterdir())
        assert names_a == names_b
        for name in names_a:
            if name == "manifest.json":
                a = read_json(tmp_path / "a" / name)
                b = read_json(tmp_path / "b" / name)
                a.pop("updated_at"), b.pop("updated_at")
                assert a == b
            else:
                assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_mismatched_spec_hash_rejected(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        spec = scripted_game_spec(pathways, tmp_path / "results", plan=[])
        run_experiment_batch(spec)
        other = scripted_game_spec(
            pathways, tmp_path / "results",
            plan=[[{"move": "prune", "instruction": "x", "target_region": ["s0"]}]],
        )
        with pytest.raises(SpecError, match="different spec"):
            run_experiment_batch(other)

    def test_baseline_runs_through_mock_gateway(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        spec = ExperimentSpec.from_dict(
            {
                "task": "corruption",
                "method": "zero_shot",
                "inputs": {"pathways": str(pathways)},
                "out_dir": str(tmp_path / "zs"),
                "seeds": [0],
            }
        )
        gw = MockGateway(default="repaired pathway\nstep after repair one\nstep after repair two")
        result = run_experiment_batch(spec, gateway=gw)
        assert result.completed == 1
        output = read_json(result.out_dir / "zero_shot--mitochondrial-protein-import--s0.output.json")
        assert output["final"]["steps"] == ["step after repair one", "step after repair two"]

    def test_failed_run_isolated(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        records = list(read_jsonl(pathways)) + [{"name": "second pathway",
                                                 "steps": ["alpha binds beta"]}]
        both = tmp_path / "two.jsonl"
        write_jsonl(both, records)
        spec = ExperimentSpec.from_dict(
            {
                "task": "corruption",
                "method": "zero_shot",
                "inputs": {"pathways": str(both)},
                "out_dir": str(tmp_path / "mixed"),
                "seeds": [0],
            }
        )
        gw = MockGateway().script("name\nonly good output")  # second call fails
        result = run_experiment_batch(spec, gateway=gw)
        assert result.completed == 1 and result.failed == 1
        manifest = read_json(result.manifest_path)
        statuses = sorted(r["status"] for r in manifest["runs"].values())
        assert statuses == ["completed", "failed"]

    def test_react_includes_corpus_evidence(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        spec = ExperimentSpec.from_dict(
            {
                "task": "corruption",
                "method": "react",
                "inputs": {"pathways": str(pathways), "corpus": str(DATA / "corpus.jsonl")},
                "out_dir": str(tmp_path / "react"),
                "seeds": [0],
            }
        )
        gw = MockGateway(default="FINAL PATHWAY:\nname\nStep 1. repaired")
        result = run_experiment_batch(spec, gateway=gw)
        assert result.completed == 1
        assert any("Retrieved evidence" in c.role_prompt or "evidence" in c.role_prompt.lower()
                   for c in gw.calls)
        output = read_json(result.out_dir / "react--mitochondrial-protein-import--s0.output.json")
        assert output["final"]["steps"] == ["repaired"]

    def test_concurrency_does_not_change_outputs(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        records = list(read_jsonl(pathways)) + [{"name": "second pathway",
                                                 "steps": ["alpha binds beta", "beta exports gamma"]}]
        both = tmp_path / "two.jsonl"
        write_jsonl(both, records)
        plan = [[{"move": "prune", "instruction": "drop the first step",
                  "target_region": ["s0"]}]]
        spec_dict = scripted_game_spec(both, tmp_path / "serial", plan).to_dict()
        spec_dict["seeds"] = [0, 1]
        spec = ExperimentSpec.from_dict(spec_dict)
        run_experiment_batch(spec, concurrency=1)
        run_experiment_batch(spec, concurrency=3, out_dir=tmp_path / "parallel")
        serial = sorted(p.name for p in (tmp_path / "serial").iterdir())
        parallel = sorted(p.name for p in (tmp_path / "parallel").iterdir())
        assert serial == parallel and len(serial) == 9  # 4 runs x 2 files + manifest
        for name in serial:
            if name != "manifest.json":
                assert (tmp_path / "serial" / name).read_bytes() == \
                    (tmp_path / "parallel" / name).read_bytes()

    def test_scored_trajectory_lines(self, tmp_path, corrupted_inputs):
        pathways, _, _ = corrupted_inputs
        plan = [[{"move": "prune", "instruction": "drop the first step",
                  "target_region": ["s0"]}]]
        spec = scripted_game_spec(
            pathways, tmp_path / "scored", plan, score=True,
            inputs={"lexicon": str(DATA / "lexicon.jsonl")},
        )
        result = run_experiment_batch(spec)
        traj = (result.out_dir /
                "hypothesis_game--mitochondrial-protein-import--s0.trajectory.jsonl")
        lines = [json.loads(l) for l in traj.read_text().splitlines()]
        assert "scores" in lines[1]
        assert set(lines[1]["scores"]) == {"d_known", "delta_div", "l_connect", "t_frag"}


class TestParseGeneratedPathway:
    def test_strips_markers_and_numbering(self):
        text = "reasoning...\nFINAL PATHWAY:\nMy Pathway\n1. step one\n- step two\nStep 3: step three"
        record = parse_generated_pathway(text, "fallback")
        assert record == {"name": "My Pathway", "steps": ["step one", "step two", "step three"]}

    def test_empty_output_rejected(self):
        with pytest.raises(EvalError):
            parse_generated_pathway("FINAL PATHWAY:\n", "fallback")


class TestEvaluateTask:
    def _outputs_dir(self, tmp_path, corrupted_inputs, steps):
        output = {
            "pathway_id": "mitochondrial protein import",
            "method": "hypothesis_game",
            "seed": 0,
            "task": "corruption",
            "final": {"name": "mitochondrial protein import", "steps": steps},
        }
        gen_dir = tmp_path / "gen"
        gen_dir.mkdir()
        write_json(gen_dir / "run.output.json", output)
        return gen_dir

    def test_perfect_repair_scores_full(self, tmp_path, corrupted_inputs, mito_record):
        pathways, bundle_path, applied = corrupted_inputs
        gen_dir = self._outputs_dir(tmp_path, corrupted_inputs, mito_record["steps"])
        rows, verdicts = evaluate_task(
            "corruption", bundle_path, gen_dir, DATA / "lexicon.jsonl",
            judge_kind="rule", out_dir=tmp_path / "eval",
        )
        assert len(rows) == 1
        row = rows[0]
        assert row["error_removal_rate"] == 1.0
        assert row["precision"] == 1.0 and row["recall"] == 1.0
        assert row["error_type"] == "wrong_relation"
        assert (tmp_path / "eval" / "metrics.jsonl").exists()
        assert len(verdicts) == len(applied)

    def test_untouched_corruption_persists(self, tmp_path, corrupted_inputs):
        pathways, bundle_path, applied = corrupted_inputs
        corrupted_record = read_json(bundle_path)["corrupted"]
        gen_dir = self._outputs_dir(tmp_path, corrupted_inputs, corrupted_record["steps"])
        rows, _ = evaluate_task(
            "corruption", bundle_path, gen_dir, DATA / "lexicon.jsonl", judge_kind="rule",
        )
        assert rows[0]["error_removal_rate"] == 0.0

    def test_reconstruction_metrics(self, tmp_path, mito_record):
        refs = tmp_path / "refs.jsonl"
        write_jsonl(refs, [mito_record])
        gen_dir = tmp_path / "gen"
        gen_dir.mkdir()
        write_json(
            gen_dir / "run.output.json",
            {
                "pathway_id": mito_record["name"],
                "method": "react",
                "seed": 0,
                "task": "reconstruction",
                "final": {"name": mito_record["name"], "steps": mito_record["steps"][:6]},
            },
        )
        rows, verdicts = evaluate_task(
            "reconstruction", refs, gen_dir, DATA / "lexicon.jsonl", judge_kind="rule",
        )
        row = rows[0]
        assert row["precision"] == 1.0
        assert row["recall"] < 1.0
        assert row["recall_input_entities"] == pytest.approx(6 / 13)
        assert len(verdicts) == 13


def bootstrap_oracle(values, n_resamples, seed):
    """Independent loop-based bootstrap using the same seed schedule."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(values), size=(n_resamples, len(values)))
    means = []
    for row in idx:
        means.append(sum(values[i] for i in row) / len(row))
    low, high = np.percentile(means, [2.5, 97.5])
    return float(np.mean(values)), float(low), float(high)


class TestAggregation:
    def test_zero_variance(self):
        assert bootstrap_ci([1.0, 1.0, 1.0]) == (1.0, 1.0, 1.0)

    def test_single_value(self):
        assert bootstrap_ci([0.7]) == (0.7, 0.7, 0.7)

    def test_matches_bootstrap_oracle(self):
        values = [0.0, 1.0]
        mean, low, high = bootstrap_ci(values, n_resamples=2000, seed=0)
        omean, olow, ohigh = bootstrap_oracle(values, 2000, 0)
        assert mean == pytest.approx(0.5)
        assert low == pytest.approx(max(0.0, min(olow, omean)))
        assert high == pytest.approx(ohigh)

    def test_matches_oracle_on_random_values(self):
        rng = np.random.default_rng(9)
        for seed in range(5):
            values = list(rng.random(rng.integers(2, 12)))
            mean, low, high = bootstrap_ci(values, n_resamples=500, seed=seed)
            omean, olow, ohigh = bootstrap_oracle(values, 500, seed)
            assert mean == pytest.approx(omean)
            assert low == pytest.approx(min(olow, omean))
            assert high == pytest.approx(max(ohigh, omean))

    def test_report_structure_and_round_trip(self, tmp_path):
        rows = [
            {"pathway_id": "p1", "method": "hypothesis_game", "seed": 0,
             "error_type": "wrong_relation", "difficulty": "L2", "fraction": 0.3,
             "error_removal_rate": 1.0, "f1": 0.9},
            {"pathway_id": "p2", "method": "hypothesis_game", "seed": 0,
             "error_type": "wrong_entity", "difficulty": "L1", "fraction": 0.3,
             "error_removal_rate": 0.5, "f1": 0.7},
            {"pathway_id": "p1", "method": "react", "seed": 0,
             "error_type": "wrong_relation", "difficulty": "L2", "fraction": 0.3,
             "error_removal_rate": 0.0, "f1": 0.4},
        ]
        metrics = tmp_path / "metrics.jsonl"
        write_jsonl(metrics, rows)
        report = aggregate_report(metrics, n_resamples=200, seed=0)
        methods = {a["method"] for a in report.aggregates}
        assert methods == {"hypothesis_game", "react"}
        # 2 methods x 2 metrics -> 4 aggregate rows
        assert len(report.aggregates) == 4
        for agg in report.aggregates:
            assert agg["ci_low"] <= agg["mean"] <= agg["ci_high"]
        strata_fields = {s["stratum"] for s in report.strata}
        assert strata_fields == {"error_type", "difficulty", "fraction"}
        # same rows and seed schedule -> identical report
        assert aggregate_report(metrics, n_resamples=200, seed=0) == report

        files = emit_report(report, tmp_path / "report")
        names = {f.name for f in files}
        assert {"report.json", "aggregates.csv", "strata.csv", "plot_data.csv"} <= names
        loaded = MetricReport.from_dict(read_json(tmp_path / "report" / "report.json"))
        assert loaded == report

    def test_recomputed_aggregates_match_rows(self, tmp_path):
        rows = [
            {"pathway_id": f"p{i}", "method": "m", "f1": v}
            for i, v in enumerate([0.2, 0.4, 0.9])
        ]
        report = aggregate_report(rows, n_resamples=100, seed=1)
        agg = next(a for a in report.aggregates if a["metric"] == "f1")
        assert agg["mean"] == pytest.approx(sum(r["f1"] for r in rows) / 3)
        assert agg["n"] == 3

    def test_empty_rejected(self, tmp_path):
        empty = tmp_path / "metrics.jsonl"
        empty.write_text("")
        with pytest.raises(EvalError):
            aggregate_report(empty)

    def test_missing_stratum_footnote(self):
        rows = [
            {"pathway_id": "p1", "method": "m", "f1": 0.5, "error_type": "wrong_entity"},
            {"pathway_id": "p2", "method": "m", "f1": 0.7},
        ]
        report = aggregate_report(rows, n_resamples=100, seed=0)
        assert any("lack error_type" in note for note in report.footnotes)


class TestCli:
    def test_corrupt_eval_report_pipeline(self, tmp_path, mito_record):
        runner = CliRunner()
        pathway_file = tmp_path / "pathway.json"
        write_json(pathway_file, mito_record)

        corrupt_dir = tmp_path / "corrupt"
        result = runner.invoke(cli_main, [
            "corrupt",
            "--bank", str(DATA / "bank_mito_import.jsonl"),
            "--pathway", str(pathway_file),
            "--error-type", "wrong_relation",
            "--difficulty", "L2",
            "--fraction", "0.3",
            "--seed", "7",
            "--out", str(corrupt_dir),
            "--lexicon", str(DATA / "lexicon.jsonl"),
        ])
        assert result.exit_code == 0, result.output
        assert "4 corruption(s)" in result.output
        assert (corrupt_dir / "corrupted_pathways.jsonl").exists()
        bundles = list(corrupt_dir.glob("*.plan.json"))
        assert len(bundles) == 1

        spec = scripted_game_spec(
            corrupt_dir / "corrupted_pathways.jsonl", tmp_path / "results",
            plan=[[{"move": "prune", "instruction": "drop the first step",
                    "target_region": ["s0"]}]],
        )
        spec_file = tmp_path / "spec.json"
        write_json(spec_file, spec.to_dict())
        result = runner.invoke(cli_main, ["run", "--spec", str(spec_file)])
        assert result.exit_code == 0, result.output
        assert "completed=1" in result.output

        eval_dir = tmp_path / "eval"
        result = runner.invoke(cli_main, [
            "eval", "--task", "corruption",
            "--ref", str(bundles[0]),
            "--gen", str(tmp_path / "results"),
            "--lexicon", str(DATA / "lexicon.jsonl"),
            "--judge", "rule",
            "--out", str(eval_dir),
        ])
        assert result.exit_code == 0, result.output
        rows = list(read_jsonl(eval_dir / "metrics.jsonl"))
        assert len(rows) == 1

        report_dir = tmp_path / "report"
        result = runner.invoke(cli_main, [
            "report", "--results", str(eval_dir), "--out", str(report_dir),
            "--resamples", "200",
        ])
        assert result.exit_code == 0, result.output
        assert (report_dir / "aggregates.csv").exists()

    def test_run_exit_code_on_failures(self, tmp_path, mito_record):
        runner = CliRunner()
        pathways = tmp_path / "p.jsonl"
        write_jsonl(pathways, [mito_record])
        # prune of an unknown id is recorded inside the game, and the game
        # still completes; to force a run failure use a broken input record.
        write_jsonl(pathways, [{"name": "bad", "steps": []}])
        spec = scripted_game_spec(pathways, tmp_path / "r", plan=[])
        spec_file = tmp_path / "spec.json"
        write_json(spec_file, spec.to_dict())
        result = runner.invoke(cli_main, ["run", "--spec", str(spec_file)])
        assert result.exit_code == 2
        assert "failed=1" in result.output

    def test_missing_spec_is_hard_error(self, tmp_path):
        runner = CliRunner()
        bad = tmp_path / "spec.json"
        bad.write_text("{}")
        result = runner.invoke(cli_main, ["run", "--spec", str(bad)])
        assert result.exit_code == 1
