"""Batch experiment runner, task evaluation, and report aggregation.

A spec file describes one (task, method) batch over a pathway set and a
seed list. Runs are resumable through a manifest keyed by spec hash; all
result files are byte-stable so identical specs reproduce identical result
directories (timestamps live only in the manifest).
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import re
import time
from dataclasses import dataclass, replace as _dc_replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .agents import Corpus, retrieve_corpus
from .core import Context, HypothesisState, parse_pathway, state_to_pathway
from .corruption import AppliedCorruption
from .engine import (
    GameConfig,
    GatewayController,
    PolicyController,
    ScriptedController,
    Trajectory,
    build_executors,
    per_fragment_selector,
    replay,
    run_localized_game,
    run_simple_game,
    sliding_window_selector,
    whole_state_selector,
)
from .errors import EvalError, GatewayError, HypgameError, SpecError
from .evaluation import (
    GatewayJudge,
    JudgeVerdict,
    Lexicon,
    RuleJudge,
    detailed_recall,
    entity_drift,
    entity_prf,
    error_removal_rate,
    judge_persistence,
    levenshtein_word_norm,
    state_entities,
)
from .gateway import Gateway, GatewayRequest, PromptLibrary
from .moves import MoveRequest, default_registry
from .serialize import read_json, read_jsonl, stable_dumps, write_json, write_jsonl

TASKS = ("corruption", "reconstruction")
METHODS = ("hypothesis_game", "zero_shot", "chain_of_thought", "react")
BASELINE_METHODS = ("zero_shot", "chain_of_thought", "react")

_ID_FIELDS = ("pathway_id", "method", "seed", "error_type", "difficulty", "fraction")
_STRATA_FIELDS = ("error_type", "difficulty", "fraction")


@dataclass(frozen=True)
class ExperimentSpec:
    """One batch: a task, a method, inputs, and replicate seeds."""

    task: str
    method: str
    inputs: dict
    out_dir: str
    seeds: tuple[int, ...] = (0,)
    game: Optional[GameConfig] = None
    controller: Optional[dict] = None
    selector: str = "whole_state"
    retrieval_k: int = 3
    score: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise SpecError(f"unknown task {self.task!r}")
        if self.method not in METHODS:
            raise SpecError(f"unknown method {self.method!r}")
        if (self.game is not None) != (self.method == "hypothesis_game"):
            raise SpecError("game config is required exactly when method is hypothesis_game")
        if not self.seeds:
            raise SpecError("at least one replicate seed is required")
        if "pathways" not in self.inputs:
            raise SpecError("inputs.pathways is required")
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "inputs", dict(self.inputs))

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "method": self.method,
            "inputs": dict(self.inputs),
            "out_dir": self.out_dir,
            "seeds": list(self.seeds),
            "game": self.game.to_dict() if self.game else None,
            "controller": self.controller,
            "selector": self.selector,
            "retrieval_k": self.retrieval_k,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        game = d.get("game")
        return cls(
            task=d["task"],
            method=d["method"],
            inputs=dict(d.get("inputs", {})),
            out_dir=d["out_dir"],
            seeds=tuple(d.get("seeds", [0])),
            game=GameConfig.from_dict(game) if game else None,
            controller=d.get("controller"),
            selector=d.get("selector", "whole_state"),
            retrieval_k=d.get("retrieval_k", 3),
            score=d.get("score", False),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(read_json(path))

    def hash(self) -> str:
        return hashlib.sha256(stable_dumps(self.to_dict()).encode("utf-8")).hexdigest()


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "pathway"


def lenient_state(record: dict, fallback_name: str = "generated") -> HypothesisState:
    """Parse a generated pathway record, tolerating model sloppiness.

    Empty and normalized-duplicate steps are dropped instead of rejected;
    model outputs do not get the benefit of strict input validation.
    """
    from .core import EvidenceRef, Fragment, normalize_statement

    name = str(record.get("name") or fallback_name)
    seen: set[str] = set()
    fragments = []
    for step in record.get("steps", []):
        norm = normalize_statement(str(step))
        if not norm or norm in seen:
            continue
        seen.add(norm)
        fragments.append(
            Fragment(
                id=f"g{len(fragments)}",
                text=str(step),
                provenance=(EvidenceRef(source="seed_input"),),
                step_index=len(fragments),
            )
        )
    return HypothesisState(pathway_name=name, fragments=tuple(fragments))


# --- running -------------------------------------------------------------------


_LIST_MARKER_RE = re.compile(r"^\s*(?:step\s*\d+[.:)]?|\d+[.)]|[-*•])\s*", re.IGNORECASE)
_FINAL_MARKER_RE = re.compile(r"FINAL PATHWAY\s*:?", re.IGNORECASE)


def parse_generated_pathway(text: str, fallback_name: str) -> dict:
    """Extract a {name, steps} record from baseline model output."""
    m = _FINAL_MARKER_RE.search(text)
    if m:
        text = text[m.end():]
    lines = [_LIST_MARKER_RE.sub("", line).strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise EvalError("model output contains no pathway lines")
    if len(lines) == 1:
        return {"name": fallback_name, "steps": lines}
    return {"name": lines[0], "steps": lines[1:]}


def _build_controller(spec: ExperimentSpec, config: GameConfig, gateway, registry):
    kind = (spec.controller or {}).get("kind", "policy")
    if kind == "scripted":
        plan = [
            [MoveRequest.from_dict(r) for r in round_requests]
            for round_requests in (spec.controller or {}).get("plan", [])
        ]
        return ScriptedController(plan)
    if kind == "policy":
        return PolicyController(config.mode, config.budget, seed=config.seed)
    if kind == "gateway":
        if gateway is None:
            raise SpecError("gateway controller requires a configured gateway")
        return GatewayController(gateway, config.mode, config.budget, registry)
    raise SpecError(f"unknown controller kind {kind!r}")


def _build_selector(name: str):
    if name == "whole_state":
        return whole_state_selector
    if name == "per_fragment":
        return per_fragment_selector
    m = re.fullmatch(r"window:(\d+)", name)
    if m:
        return sliding_window_selector(int(m.group(1)))
    raise SpecError(f"unknown selector {name!r}")


def _initial_state(spec: ExperimentSpec, record: dict) -> HypothesisState:
    if spec.task == "corruption":
        return parse_pathway({"name": record["name"], "steps": record["steps"]})
    cue = record.get("cue") or record["name"]
    return parse_pathway({"name": record["name"], "steps": [cue]})


def _task_prompt(spec: ExperimentSpec, record: dict, prompts: PromptLibrary) -> str:
    if spec.task == "corruption":
        return prompts.render(
            "user_prompt_corruption",
            pathway_name=record["name"],
            steps="\n".join(record["steps"]),
        )
    return prompts.render(
        "user_prompt_reconstruction",
        pathway_name=record["name"],
        cue=record.get("cue") or record["name"],
    )


def _run_one(
    spec: ExperimentSpec,
    record: dict,
    seed: int,
    corpus: Optional[Corpus],
    gateway: Optional[Gateway],
    integrator,
    prompts: PromptLibrary,
    lexicon: Optional[Lexicon],
) -> tuple[dict, Optional[Trajectory]]:
    """Execute one (pathway, seed) run; returns (output record, trajectory)."""
    name = record["name"]
    if spec.method == "hypothesis_game":
        config = _dc_replace(spec.game, seed=seed)
        registry = default_registry()
        controller = _build_controller(spec, config, gateway, registry)
        executors = build_executors(
            corpus=corpus,
            gateway=gateway,
            prompts=prompts,
            integrator=integrator,
            retrieval_k=spec.retrieval_k,
        )
        initial = _initial_state(spec, record)
        context = Context(task_goal=config.task_goal, corpus_ref=spec.inputs.get("corpus"))
        if config.variant == "localized":
            trajectory = run_localized_game(
                config, initial, controller, _build_selector(spec.selector),
                registry, executors, context,
            )
        else:
            trajectory = run_simple_game(config, initial, controller, registry, executors, context)
        replay(trajectory, initial)  # self-check before anything is written
        final = state_to_pathway(trajectory.final)
        output = {
            "pathway_id": name,
            "method": spec.method,
            "seed": seed,
            "task": spec.task,
            "final": final,
            "termination_reason": trajectory.termination_reason,
            "rounds": len(trajectory.rounds),
        }
        return output, trajectory

    # Baselines: one templated gateway call (ReAct sees retrieved evidence).
    if gateway is None:
        raise GatewayError("baseline methods require a gateway", retriable=False)
    task_text = _task_prompt(spec, record, prompts)
    if spec.method == "react":
        evidence_block = "(no corpus available)"
        if corpus is not None:
            evidence = retrieve_corpus(task_text, corpus, spec.retrieval_k)
            if evidence:
                evidence_block = "\n".join(f"- {e.text}" for e in evidence)
        role = prompts.render("react", task=task_text, evidence=evidence_block)
    else:
        role = prompts.render(spec.method, task=task_text)
    response = gateway.complete(
        GatewayRequest(role_prompt=role, user_prompt=task_text, seed_hint=seed)
    )
    final = parse_generated_pathway(response.text, fallback_name=name)
    output = {
        "pathway_id": name,
        "method": spec.method,
        "seed": seed,
        "task": spec.task,
        "final": final,
    }
    return output, None


def _scored_trajectory_lines(trajectory: Trajectory, lexicon: Lexicon) -> list[str]:
    """Trajectory JSONL with a per-round score vector appended to each line."""
    from .core import apply_delta
    from .scoring import score_vector

    lines = trajectory.to_jsonl_lines()
    known = [trajectory.initial]
    state = trajectory.initial
    scored = [lines[0]]
    import json

    for i, record in enumerate(trajectory.rounds):
        for move in record.applied:
            state = apply_delta(state, move.delta)
        state = state.with_round(state.round + 1)
        row = json.loads(lines[1 + i])
        row["scores"] = score_vector(state, known, lexicon).to_dict()
        scored.append(stable_dumps(row))
    scored.append(lines[-1])
    return scored


@dataclass
class BatchResult:
    out_dir: Path
    completed: int
    skipped: int
    failed: int
    manifest_path: Path

    @property
    def ok(self) -> bool:
        return self.failed == 0


def run_experiment_batch(
    spec: ExperimentSpec,
    gateway: Optional[Gateway] = None,
    integrator=None,
    concurrency: int = 1,
    out_dir: Optional[str | Path] = None,
) -> BatchResult:
    """Run every (pathway, replicate seed) pair the manifest has not completed.

    Each run owns its files (one output record, plus one trajectory for game
    methods); failures are recorded and do not stop the batch. Reruns of a
    completed batch are no-ops.
    """
    out = Path(out_dir or spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    spec_hash = spec.hash()
    if manifest_path.exists():
        manifest = read_json(manifest_path)
        if manifest.get("spec_hash") != spec_hash:
            raise SpecError(
                f"results directory {out} was produced by a different spec"
            )
    else:
        manifest = {"spec_hash": spec_hash, "runs": {}}

    records = list(read_jsonl(spec.inputs["pathways"]))
    if not records:
        raise SpecError("pathway input file is empty")
    corpus = Corpus.load(spec.inputs["corpus"]) if spec.inputs.get("corpus") else None
    lexicon = Lexicon.load(spec.inputs["lexicon"]) if spec.inputs.get("lexicon") else None
    if spec.score and lexicon is None:
        raise SpecError("scoring requires inputs.lexicon")
    prompts = PromptLibrary()

    todo = []
    skipped = 0
    for record in records:
        for seed in spec.seeds:
            run_id = f"{spec.method}--{_slug(record['name'])}--s{seed}"
            if manifest["runs"].get(run_id, {}).get("status") == "completed":
                skipped += 1
            else:
                todo.append((run_id, record, seed))

    def execute(item):
        run_id, record, seed = item
        try:
            output, trajectory = _run_one(
                spec, record, seed, corpus, gateway, integrator, prompts, lexicon
            )
        except HypgameError as exc:
            return run_id, record, seed, None, f"{type(exc).__name__}: {exc}"
        files = [f"{run_id}.output.json"]
        write_json(out / files[0], output)
        if trajectory is not None:
            traj_file = f"{run_id}.trajectory.jsonl"
            if spec.score:
                lines = _scored_trajectory_lines(trajectory, lexicon)
            else:
                lines = trajectory.to_jsonl_lines()
            (out / traj_file).write_text("\n".join(lines) + "\n", encoding="utf-8")
            files.append(traj_file)
        return run_id, record, seed, files, None

    completed = failed = 0
    if concurrency > 1 and len(todo) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=concurrency) as pool:
            results = list(pool.map(execute, todo))
    else:
        results = [execute(item) for item in todo]

    for run_id, record, seed, files, error in results:
        entry = {"seed": seed, "pathway_id": record["name"]}
        if error is None:
            entry.update(status="completed", files=files)
            completed += 1
        else:
            entry.update(status="failed", error=error)
            failed += 1
        manifest["runs"][run_id] = entry

    manifest["updated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    manifest["runs"] = {k: manifest["runs"][k] for k in sorted(manifest["runs"])}
    write_json(manifest_path, manifest)
    return BatchResult(
        out_dir=out,
        completed=completed,
        skipped=skipped,
        failed=failed,
        manifest_path=manifest_path,
    )


# --- evaluation over result directories -------------------------------------------


def _load_outputs(gen: str | Path) -> list[dict]:
    path = Path(gen)
    if path.is_dir():
        return [read_json(p) for p in sorted(path.glob("*.output.json"))]
    if path.suffix == ".jsonl":
        return list(read_jsonl(path))
    return [read_json(path)]


def _load_corruption_refs(ref: str | Path) -> list[dict]:
    path = Path(ref)
    if path.is_dir():
        return [read_json(p) for p in sorted(path.glob("*plan.json"))]
    if path.suffix == ".jsonl":
        return list(read_jsonl(path))
    return [read_json(path)]


def eval_corruption(
    refs: Sequence[dict], outputs: Sequence[dict], lexicon: Lexicon, judge
) -> tuple[list[dict], list[dict]]:
    """Judge error persistence and score entity fidelity per output.

    Each ref bundle carries the original record, the applied corruption
    metadata, and the sampling policy (for stratification). Outputs are
    matched to bundles by pathway_id.
    """
    by_pathway = {bundle["original"]["name"]: bundle for bundle in refs}
    rows: list[dict] = []
    verdict_rows: list[dict] = []
    for output in outputs:
        bundle = by_pathway.get(output["pathway_id"])
        if bundle is None:
            raise EvalError(f"no corruption reference for {output['pathway_id']!r}")
        applied = [AppliedCorruption.from_dict(a) for a in bundle["applied"]]
        final_state = lenient_state(output["final"], fallback_name=output["pathway_id"])
        verdicts = []
        for rec in applied:
            persists = judge_persistence(rec.original, rec.corrupted, final_state, judge)
            verdict = JudgeVerdict(
                item_id=f"{output['pathway_id']}:{rec.anchor_index}:s{output.get('seed', 0)}",
                persists=persists,
            )
            verdicts.append(verdict)
            verdict_rows.append(
                {**verdict.to_dict(), "method": output.get("method"), "seed": output.get("seed")}
            )
        ref_state = parse_pathway(bundle["original"])
        prf = entity_prf(
            state_entities(ref_state, lexicon), state_entities(final_state, lexicon)
        )
        drift = entity_drift(ref_state, final_state, lexicon)
        policy = bundle.get("policy", {})
        rows.append(
            {
                "pathway_id": output["pathway_id"],
                "method": output.get("method"),
                "seed": output.get("seed"),
                "error_type": policy.get("error_type"),
                "difficulty": policy.get("difficulty"),
                "fraction": policy.get("fraction"),
                "error_removal_rate": error_removal_rate(verdicts),
                "precision": prf.precision,
                "recall": prf.recall,
                "f1": prf.f1,
                "levenshtein": levenshtein_word_norm(
                    " ".join(bundle["original"]["steps"]),
                    " ".join(output["final"]["steps"]),
                ),
                "entities_added": drift["added"],
                "entities_removed": drift["removed"],
            }
        )
    return rows, verdict_rows


def eval_reconstruction(
    refs: Sequence[dict], outputs: Sequence[dict], lexicon: Lexicon, judge
) -> tuple[list[dict], list[dict]]:
    """Entity fidelity plus reaction-level detailed recall per output."""
    by_pathway = {r["name"]: r for r in refs}
    rows: list[dict] = []
    verdict_rows: list[dict] = []
    for output in outputs:
        ref = by_pathway.get(output["pathway_id"])
        if ref is None:
            raise EvalError(f"no reference pathway for {output['pathway_id']!r}")
        ref_state = parse_pathway(ref)
        final_state = lenient_state(output["final"], fallback_name=output["pathway_id"])
        prf = entity_prf(
            state_entities(ref_state, lexicon), state_entities(final_state, lexicon)
        )
        report = detailed_recall(ref["steps"], final_state, judge)
        for v in report.verdicts:
            verdict_rows.append(
                {**v.to_dict(), "pathway_id": output["pathway_id"],
                 "method": output.get("method"), "seed": output.get("seed")}
            )
        drift = entity_drift(ref_state, final_state, lexicon)
        rows.append(
            {
                "pathway_id": output["pathway_id"],
                "method": output.get("method"),
                "seed": output.get("seed"),
                "precision": prf.precision,
                "recall": prf.recall,
                "f1": prf.f1,
                **{f"recall_{k}": v for k, v in report.rates.items()},
                "levenshtein": levenshtein_word_norm(
                    " ".join(ref["steps"]), " ".join(output["final"]["steps"])
                ),
                "entities_added": drift["added"],
                "entities_removed": drift["removed"],
            }
        )
    return rows, verdict_rows


def evaluate_task(
    task: str,
    ref: str | Path,
    gen: str | Path,
    lexicon_path: str | Path,
    judge_kind: str = "rule",
    gateway: Optional[Gateway] = None,
    out_dir: Optional[str | Path] = None,
) -> tuple[list[dict], list[dict]]:
    """CLI-facing evaluation: resolve inputs, judge, optionally write files."""
    lexicon = Lexicon.load(lexicon_path)
    if judge_kind == "rule":
        judge = RuleJudge()
    elif judge_kind == "gateway":
        if gateway is None:
            raise EvalError("gateway judge requires a configured gateway")
        judge = GatewayJudge(gateway)
    else:
        raise EvalError(f"unknown judge {judge_kind!r}")

    outputs = _load_outputs(gen)
    if task == "corruption":
        rows, verdicts = eval_corruption(_load_corruption_refs(ref), outputs, lexicon, judge)
    elif task == "reconstruction":
        refs = list(read_jsonl(ref))
        rows, verdicts = eval_reconstruction(refs, outputs, lexicon, judge)
    else:
        raise EvalError(f"unknown task {task!r}")

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "metrics.jsonl", rows)
        write_jsonl(out / "verdicts.jsonl", verdicts)
    return rows, verdicts


# --- aggregation -------------------------------------------------------------------


def bootstrap_ci(
    values: Sequence[float], n_resamples: int = 10_000, seed: int = 0
) -> tuple[float, float, float]:
    """(mean, ci_low, ci_high) with seeded percentile-bootstrap bounds.

    Resample indices come from numpy's default_rng(seed) as one
    (n_resamples, n) integer draw; the 2.5/97.5 percentiles of the resample
    means form the interval. Degenerate inputs collapse to [mean, mean].
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise EvalError("cannot aggregate an empty value list")
    mean = float(arr.mean())
    if arr.size == 1 or np.all(arr == arr[0]):
        return mean, mean, mean
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(n_resamples, arr.size))
    means = arr[idx].mean(axis=1)
    low, high = np.percentile(means, [2.5, 97.5])
    # Percentile intervals are not guaranteed to bracket the sample mean.
    return mean, float(min(low, mean)), float(max(high, mean))


@dataclass(frozen=True)
class MetricReport:
    """Per-item rows plus aggregate and stratified means with 95% CIs."""

    rows: tuple[dict, ...]
    aggregates: tuple[dict, ...]
    strata: tuple[dict, ...]
    footnotes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rows": list(self.rows),
            "aggregates": list(self.aggregates),
            "strata": list(self.strata),
            "footnotes": list(self.footnotes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            rows=tuple(d.get("rows", [])),
            aggregates=tuple(d.get("aggregates", [])),
            strata=tuple(d.get("strata", [])),
            footnotes=tuple(d.get("footnotes", [])),
        )


def _metric_columns(rows: Sequence[dict]) -> list[str]:
    columns = set()
    for row in rows:
        for key, value in row.items():
            if key in _ID_FIELDS:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                continue
            columns.add(key)
    return sorted(columns)


def aggregate_report(
    results: str | Path | Sequence[dict],
    n_resamples: int = 10_000,
    seed: int = 0,
) -> MetricReport:
    """Aggregate metric rows into per-method means with bootstrap CIs.

    Accepts a metrics.jsonl file, a directory containing *.metrics.jsonl /
    metrics.jsonl files, or the rows themselves. Stratified views cover
    error_type, difficulty, and fraction where rows carry them.
    """
    if isinstance(results, (str, Path)):
        path = Path(results)
        if path.is_dir():
            files = sorted(path.rglob("metrics.jsonl")) + sorted(path.rglob("*.metrics.jsonl"))
            rows = [row for f in files for row in read_jsonl(f)]
        else:
            rows = list(read_jsonl(path))
    else:
        rows = list(results)
    if not rows:
        raise EvalError("no metric rows to aggregate")

    metrics = _metric_columns(rows)
    methods = sorted({str(r.get("method")) for r in rows})
    aggregates = []
    for method in methods:
        method_rows = [r for r in rows if str(r.get("method")) == method]
        for metric in metrics:
            values = [r[metric] for r in method_rows if isinstance(r.get(metric), (int, float))
                      and not isinstance(r.get(metric), bool)]
            if not values:
                continue
            mean, low, high = bootstrap_ci(values, n_resamples=n_resamples, seed=seed)
            aggregates.append(
                {
                    "method": method,
                    "metric": metric,
                    "n": len(values),
                    "mean": mean,
                    "ci_low": low,
                    "ci_high": high,
                }
            )

    strata = []
    footnotes = []
    for field in _STRATA_FIELDS:
        with_field = [r for r in rows if r.get(field) is not None]
        if not with_field:
            continue
        missing = len(rows) - len(with_field)
        if missing:
            footnotes.append(f"{missing} row(s) lack {field}; omitted from {field} strata")
        values_of_field = sorted({r[field] for r in with_field}, key=str)
        for value in values_of_field:
            for method in methods:
                group = [
                    r
                    for r in with_field
                    if r[field] == value and str(r.get("method")) == method
                ]
                if not group:
                    continue
                for metric in metrics:
                    vals = [g[metric] for g in group if isinstance(g.get(metric), (int, float))
                            and not isinstance(g.get(metric), bool)]
                    if not vals:
                        continue
                    mean, low, high = bootstrap_ci(vals, n_resamples=n_resamples, seed=seed)
                    strata.append(
                        {
                            "stratum": field,
                            "value": value,
                            "method": method,
                            "metric": metric,
                            "n": len(vals),
                            "mean": mean,
                            "ci_low": low,
                            "ci_high": high,
                        }
                    )

    return MetricReport(
        rows=tuple(rows),
        aggregates=tuple(aggregates),
        strata=tuple(strata),
        footnotes=tuple(footnotes),
    )


def emit_report(report: MetricReport, out_dir: str | Path) -> list[Path]:
    """Write the report as JSON, CSV tables, and plot-ready data files."""
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    report_json = out / "report.json"
    write_json(report_json, report.to_dict())
    written.append(report_json)

    agg_csv = out / "aggregates.csv"
    with open(agg_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["method", "metric", "n", "mean", "ci_low", "ci_high"])
        writer.writeheader()
        writer.writerows(report.aggregates)
    written.append(agg_csv)

    strata_csv = out / "strata.csv"
    with open(strata_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["stratum", "value", "method", "metric", "n", "mean", "ci_low", "ci_high"],
        )
        writer.writeheader()
        writer.writerows(report.strata)
    written.append(strata_csv)

    plot_csv = out / "plot_data.csv"
    with open(plot_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["metric", "method", "mean", "ci_low", "ci_high"])
        writer.writeheader()
        for agg in report.aggregates:
            writer.writerow({k: agg[k] for k in ("metric", "method", "mean", "ci_low", "ci_high")})
    written.append(plot_csv)

    if report.footnotes:
        notes = out / "notes.txt"
        notes.write_text("\n".join(report.footnotes) + "\n", encoding="utf-8")
        written.append(notes)
    return written
