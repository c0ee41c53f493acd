"""Game engine: mode-conditioned controllers drive moves over the state.

Two variants share one loop. The simple game treats the whole hypothesis as
the editable unit; the localized game has a selector propose fragment
regions, confines each move to its region, and enforces consistency after
every (move, region) pair. With a whole-state selector the localized game
reduces exactly to the simple one.

Every round is recorded as a replayable delta sequence; a trajectory that
cannot be replayed onto its initial state is corrupt and says so.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

from .agents import (
    EvidenceRecord,
    expand,
    format_state,
    prune,
    retrieve_corpus,
    retrieve_introspection,
    run_debate,
)
from .core import (
    Context,
    DeltaSet,
    HypothesisState,
    apply_delta,
    diff_states,
    enforce_consistency,
)
from .errors import (
    BudgetExceeded,
    ConsistencyError,
    DebateError,
    ExecutorError,
    GatewayError,
    MoveError,
    RegionViolation,
    ReplayError,
    StateError,
)
from .gateway import Gateway, GatewayRequest, PromptLibrary
from .moves import MoveBudget, MoveRegistry, MoveRequest, check_budget
from .serialize import stable_dumps

logger = logging.getLogger(__name__)

GAME_VARIANTS = ("simple", "localized")
TERMINATION_REASONS = ("controller", "max_rounds", "stalled")


@dataclass(frozen=True)
class Mode:
    """A named bias over move selection: restricted set plus weights.

    The weights drive the policy controller's sampling distribution; the
    description is injected into gateway controller prompts. Both express
    the same bias through different controllers.
    """

    name: str
    allowed: frozenset[str]
    weights: dict[str, float] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        object.__setattr__(self, "weights", dict(self.weights))
        if not set(self.weights) <= self.allowed:
            raise MoveError(f"mode {self.name!r}: weight keys must be allowed moves")
        if any(w < 0 for w in self.weights.values()):
            raise MoveError(f"mode {self.name!r}: weights must be non-negative")
        if not any(w > 0 for w in self.weights.values()):
            raise MoveError(f"mode {self.name!r}: needs at least one positive weight")

    def distribution(self) -> list[tuple[str, float]]:
        """Normalized (move, probability) pairs in sorted-name order."""
        names = sorted(self.allowed)
        raw = [self.weights.get(n, 0.0) for n in names]
        total = sum(raw)
        return [(n, w / total) for n, w in zip(names, raw)]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "allowed": sorted(self.allowed),
            "weights": {k: self.weights[k] for k in sorted(self.weights)},
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mode":
        return cls(
            name=d["name"],
            allowed=frozenset(d["allowed"]),
            weights=dict(d.get("weights", {})),
            description=d.get("description", ""),
        )


def discovery_mode() -> Mode:
    """Expansion-heavy preset: grow the hypothesis, criticize sparingly."""
    return Mode(
        name="discovery",
        allowed=frozenset({"prune", "expand_corpus", "expand_introspection", "debate"}),
        weights={"expand_corpus": 0.35, "expand_introspection": 0.35, "prune": 0.15, "debate": 0.15},
        description=(
            "Discovery mode: favor generative moves that expand the hypothesis "
            "with new evidence-backed statements; prune and debate only when a "
            "statement is clearly unsupportable."
        ),
    )


def validation_mode() -> Mode:
    """Criticism-heavy preset: prune and debate dominate."""
    return Mode(
        name="validation",
        allowed=frozenset({"prune", "expand_corpus", "expand_introspection", "debate"}),
        weights={"prune": 0.35, "debate": 0.35, "expand_corpus": 0.15, "expand_introspection": 0.15},
        description=(
            "Validation mode: favor critical moves; challenge, debate, and "
            "remove weakly supported statements before expanding further."
        ),
    )


def uniform_mode(moves: Sequence[str]) -> Mode:
    return Mode(
        name="uniform",
        allowed=frozenset(moves),
        weights={m: 1.0 for m in moves},
        description="Uniform mode: no bias over the available moves.",
    )


def sample_moves(mode: Mode, k: int, rng: random.Random) -> list[str]:
    """Draw k move names independently (with replacement) from the mode.

    Fully determined by the supplied rng stream; the population is iterated
    in sorted-name order so identical seeds give identical draws.
    """
    if k < 1:
        raise MoveError(f"k must be at least 1, got {k}")
    dist = mode.distribution()
    names = [n for n, _ in dist]
    probs = [p for _, p in dist]
    return rng.choices(names, weights=probs, k=k)


@dataclass(frozen=True)
class GameConfig:
    mode: Mode
    budget: MoveBudget = MoveBudget()
    max_rounds: int = 8
    seed: int = 0
    variant: str = "simple"
    task_goal: str = "refine the hypothesis"

    def __post_init__(self):
        if self.max_rounds < 1:
            raise MoveError("max_rounds must be at least 1")
        if self.variant not in GAME_VARIANTS:
            raise MoveError(f"unknown game variant {self.variant!r}")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.to_dict(),
            "budget": self.budget.to_dict(),
            "max_rounds": self.max_rounds,
            "seed": self.seed,
            "variant": self.variant,
            "task_goal": self.task_goal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GameConfig":
        return cls(
            mode=Mode.from_dict(d["mode"]),
            budget=MoveBudget.from_dict(d.get("budget", {})),
            max_rounds=d.get("max_rounds", 8),
            seed=d.get("seed", 0),
            variant=d.get("variant", "simple"),
            task_goal=d.get("task_goal", "refine the hypothesis"),
        )


@dataclass(frozen=True)
class Diagnosis:
    """Controller verdict on the current state; terminating means no moves."""

    summary: str
    recommendations: tuple[MoveRequest, ...] = ()
    terminate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "recommendations", tuple(self.recommendations))
        if self.terminate and self.recommendations:
            raise MoveError("terminating diagnosis cannot carry recommendations")

    def to_dict(self) -> dict:
        return {
            "summary": self.summary,
            "recommendations": [r.to_dict() for r in self.recommendations],
            "terminate": self.terminate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnosis":
        return cls(
            summary=d["summary"],
            recommendations=tuple(MoveRequest.from_dict(r) for r in d.get("recommendations", [])),
            terminate=d.get("terminate", False),
        )


@dataclass(frozen=True)
class Region:
    """A selector-proposed set of fragment ids a local move may rewrite."""

    fragment_ids: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "fragment_ids", frozenset(self.fragment_ids))
        if not self.fragment_ids:
            raise StateError("region must contain at least one fragment id")

    def validate_against(self, state: HypothesisState) -> None:
        missing = self.fragment_ids - set(state.ids)
        if missing:
            raise StateError(f"region references unknown fragment ids {sorted(missing)}")


@dataclass(frozen=True)
class AppliedMove:
    request: MoveRequest
    delta: DeltaSet
    evidence: tuple[EvidenceRecord, ...] = ()

    def to_dict(self) -> dict:
        return {
            "request": self.request.to_dict(),
            "delta": self.delta.to_dict(),
            "evidence": [e.to_dict() for e in self.evidence],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AppliedMove":
        return cls(
            request=MoveRequest.from_dict(d["request"]),
            delta=DeltaSet.from_dict(d["delta"]),
            evidence=tuple(EvidenceRecord.from_dict(e) for e in d.get("evidence", [])),
        )


@dataclass(frozen=True)
class RoundRecord:
    diagnosis: Diagnosis
    applied: tuple[AppliedMove, ...] = ()
    error: Optional[str] = None
    digest: str = ""

    def to_dict(self) -> dict:
        return {
            "diagnosis": self.diagnosis.to_dict(),
            "applied": [a.to_dict() for a in self.applied],
            "error": self.error,
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        return cls(
            diagnosis=Diagnosis.from_dict(d["diagnosis"]),
            applied=tuple(AppliedMove.from_dict(a) for a in d.get("applied", [])),
            error=d.get("error"),
            digest=d.get("digest", ""),
        )


def state_digest(state: HypothesisState) -> str:
    return hashlib.sha256(stable_dumps(state.to_dict()).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Trajectory:
    """Complete replayable game record."""

    config: GameConfig
    initial: HypothesisState
    rounds: tuple[RoundRecord, ...]
    final: HypothesisState
    termination_reason: str

    def __post_init__(self):
        if self.termination_reason not in TERMINATION_REASONS:
            raise StateError(f"unknown termination reason {self.termination_reason!r}")

    def to_jsonl_lines(self) -> list[str]:
        lines = [stable_dumps({"config": self.config.to_dict(), "initial": self.initial.to_dict()})]
        lines.extend(stable_dumps(r.to_dict()) for r in self.rounds)
        lines.append(
            stable_dumps({"final": self.final.to_dict(), "termination_reason": self.termination_reason})
        )
        return lines

    def to_jsonl(self) -> str:
        return "\n".join(self.to_jsonl_lines()) + "\n"

    @classmethod
    def from_jsonl_lines(cls, lines: Sequence[str], config: Optional[GameConfig] = None) -> "Trajectory":
        import json

        if len(lines) < 2:
            raise ReplayError("trajectory file needs a header and a footer line")
        header = json.loads(lines[0])
        footer = json.loads(lines[-1])
        return cls(
            config=config or GameConfig.from_dict(header["config"]),
            initial=HypothesisState.from_dict(header["initial"]),
            rounds=tuple(RoundRecord.from_dict(json.loads(l)) for l in lines[1:-1]),
            final=HypothesisState.from_dict(footer["final"]),
            termination_reason=footer["termination_reason"],
        )


# --- controllers --------------------------------------------------------------


class Controller(Protocol):
    def diagnose(
        self,
        state: HypothesisState,
        context: Context,
        regions: Optional[Sequence[Region]] = None,
    ) -> Diagnosis: ...


class ScriptedController:
    """Replays a fixed per-round plan, then terminates. For tests and replays."""

    def __init__(self, plan: Sequence[Sequence[MoveRequest]]):
        self.plan = [tuple(round_requests) for round_requests in plan]
        self._cursor = 0

    def diagnose(self, state, context, regions=None):
        if self._cursor >= len(self.plan):
            return Diagnosis(summary="plan exhausted", terminate=True)
        requests = self.plan[self._cursor]
        self._cursor += 1
        return Diagnosis(
            summary=f"scripted round {self._cursor}: {len(requests)} request(s)",
            recommendations=requests,
        )


_POLICY_INSTRUCTIONS = {
    "prune": "Remove the statement: {text}",
    "expand_corpus": "Find corpus support relating to: {text}",
    "expand_introspection": "Recall established knowledge relating to: {text}",
    "debate": "Debate whether this statement is correct: {text}",
}


class PolicyController:
    """Samples moves from the mode distribution with a seeded stream.

    Instructions come from fixed per-move templates anchored to an
    rng-chosen fragment, so a (seed, state) pair fully determines the round.
    Never terminates on its own; games end at max_rounds or by stalling.
    """

    def __init__(self, mode: Mode, budget: MoveBudget, seed: int):
        self.mode = mode
        self.budget = budget
        self.rng = random.Random(seed)

    def diagnose(self, state, context, regions=None):
        k = self.rng.randint(1, self.budget.k_max)
        names = sample_moves(self.mode, k, self.rng)
        by_id = {f.id: f for f in state.fragments}
        requests = []
        for name in names:
            if regions:
                # Choose a candidate region, then anchor inside it; prune
                # narrows to a single fragment so it can never empty the state.
                region = self.rng.choice(list(regions))
                anchor = by_id[self.rng.choice(sorted(region.fragment_ids))]
                target = frozenset({anchor.id}) if name == "prune" else region.fragment_ids
            else:
                anchor = self.rng.choice(state.fragments)
                target = frozenset({anchor.id}) if name == "prune" else None
            if name == "prune" and len(state.fragments) < 2:
                continue  # pruning the last fragment is forbidden
            requests.append(
                MoveRequest(
                    move=name,
                    instruction=_POLICY_INSTRUCTIONS[name].format(text=anchor.text),
                    target_region=target,
                )
            )
        return Diagnosis(
            summary=f"policy sampled {len(requests)} move(s) under mode {self.mode.name}",
            recommendations=tuple(requests),
        )


_MOVE_LINE_RE = re.compile(r"^MOVE\s+(\S+?)(?:\s*\[region:\s*([^\]]*)\])?\s*:\s*(.+)$")


class GatewayController:
    """Game Master backed by the model gateway: diagnose, then select moves."""

    def __init__(
        self,
        gateway: Gateway,
        mode: Mode,
        budget: MoveBudget,
        registry: MoveRegistry,
        prompts: Optional[PromptLibrary] = None,
    ):
        self.gateway = gateway
        self.mode = mode
        self.budget = budget
        self.registry = registry
        self.prompts = prompts or PromptLibrary()

    def diagnose(self, state, context, regions=None):
        listing = format_state(state)
        diag_role = self.prompts.render(
            "diagnose",
            mode=self.mode.description or self.mode.name,
            task_goal=context.task_goal,
            pathway_name=state.pathway_name,
            round=state.round,
            hypothesis=listing,
        )
        diag = self.gateway.complete(
            GatewayRequest(role_prompt=diag_role, user_prompt=context.task_goal)
        )
        summary, stop = self._parse_diagnosis(diag.text)
        if stop:
            return Diagnosis(summary=summary, terminate=True)

        regions_block = ""
        if regions:
            listing_regions = "; ".join(
                "{" + ",".join(sorted(r.fragment_ids)) + "}" for r in regions
            )
            regions_block = f"Candidate regions (pick one per move): {listing_regions}\n"
        select_role = self.prompts.render(
            "move_selection",
            mode=self.mode.description or self.mode.name,
            task_goal=context.task_goal,
            k_max=self.budget.k_max,
            available_moves=", ".join(sorted(self.mode.allowed)),
            diagnosis=summary,
            pathway_name=state.pathway_name,
            hypothesis=listing,
            regions_block=regions_block,
        )
        selection = self.gateway.complete(
            GatewayRequest(role_prompt=select_role, user_prompt=summary)
        )
        return Diagnosis(
            summary=summary, recommendations=tuple(self._parse_moves(selection.text))
        )

    @staticmethod
    def _parse_diagnosis(text: str) -> tuple[str, bool]:
        summary = text.strip()
        stop = False
        for line in text.splitlines():
            stripped = line.strip()
            if stripped.upper().startswith("ASSESSMENT:"):
                summary = stripped.split(":", 1)[1].strip()
            elif stripped.upper().startswith("DECISION:"):
                stop = "STOP" in stripped.upper()
        return summary or "(no assessment)", stop

    def _parse_moves(self, text: str) -> list[MoveRequest]:
        requests = []
        for line in text.splitlines():
            m = _MOVE_LINE_RE.match(line.strip())
            if not m:
                continue
            name, region_csv, instruction = m.group(1), m.group(2), m.group(3)
            if name not in self.registry or name not in self.mode.allowed:
                logger.warning("controller proposed unavailable move %r; skipped", name)
                continue
            region = None
            if region_csv:
                ids = frozenset(x.strip() for x in region_csv.split(",") if x.strip())
                region = ids or None
            requests.append(MoveRequest(move=name, instruction=instruction.strip(), target_region=region))
        return requests


# --- selectors ------------------------------------------------------------------

Selector = Callable[[HypothesisState], list[Region]]


def whole_state_selector(state: HypothesisState) -> list[Region]:
    return [Region(frozenset(state.ids))]


def per_fragment_selector(state: HypothesisState) -> list[Region]:
    return [Region(frozenset({fid})) for fid in state.ids]


def sliding_window_selector(width: int) -> Selector:
    if width < 1:
        raise StateError("window width must be at least 1")

    def select(state: HypothesisState) -> list[Region]:
        ids = state.ids
        if len(ids) <= width:
            return [Region(frozenset(ids))]
        return [Region(frozenset(ids[i : i + width])) for i in range(len(ids) - width + 1)]

    return select


def entity_mention_selector(lexicon) -> Selector:
    """One region per entity: the fragments that mention it."""

    def select(state: HypothesisState) -> list[Region]:
        from .evaluation import tag_entities

        by_entity: dict[str, set[str]] = {}
        for f in state.fragments:
            for entity in tag_entities(f.text, lexicon).entities:
                by_entity.setdefault(entity, set()).add(f.id)
        regions = [Region(frozenset(ids)) for _, ids in sorted(by_entity.items())]
        return regions or [Region(frozenset(state.ids))]

    return select


# --- executors -------------------------------------------------------------------

Executor = Callable[
    [HypothesisState, MoveRequest, Context], tuple[HypothesisState, DeltaSet, list[EvidenceRecord]]
]


def build_executors(
    corpus=None,
    gateway: Optional[Gateway] = None,
    prompts: Optional[PromptLibrary] = None,
    integrator=None,
    retrieval_k: int = 3,
    n_claimsmiths: int = 2,
    n_turns: int = 1,
) -> dict[str, Executor]:
    """Wire the four atomic executors to their dependencies.

    The integrator (gateway or offline callable) turns evidence into edit
    commands for expand; when absent the gateway fills that role. Executors
    missing a dependency fail at call time, not wiring time, so offline
    games can still register the full grammar.
    """
    lib = prompts or PromptLibrary()

    def exec_prune(state, request, context):
        if request.target_region:
            targets = request.target_region
        elif gateway is not None:
            role = lib.render(
                "prune",
                instruction=request.instruction,
                pathway_name=state.pathway_name,
                hypothesis=format_state(state),
            )
            response = gateway.complete(
                GatewayRequest(role_prompt=role, user_prompt=request.instruction)
            )
            from .agents import parse_edit_commands

            parsed = [c[1] for c in parse_edit_commands(response.text) if c[0] == "remove"]
            targets = [fid for fid in parsed if state.has_fragment(fid)]
            dropped = set(parsed) - set(targets)
            if dropped:
                logger.warning("prune: ignoring unknown fragment ids %s", sorted(dropped))
        else:
            raise ExecutorError("prune needs explicit targets or a gateway")
        new_state, delta = prune(state, targets)
        return new_state, delta, []

    def exec_expand_corpus(state, request, context):
        if corpus is None:
            raise ExecutorError("expand_corpus needs a corpus")
        integ = integrator or gateway
        if integ is None:
            raise ExecutorError("expand needs an integrator or a gateway")
        evidence = retrieve_corpus(request.instruction, corpus, retrieval_k)
        new_state, delta = expand(state, evidence, request.instruction, integ, lib)
        return new_state, delta, evidence

    def exec_expand_introspection(state, request, context):
        if gateway is None:
            raise ExecutorError("expand_introspection needs a gateway")
        integ = integrator or gateway
        evidence = retrieve_introspection(
            request.instruction, gateway, lib, task_goal=context.task_goal
        )
        new_state, delta = expand(state, evidence, request.instruction, integ, lib)
        return new_state, delta, evidence

    def exec_debate(state, request, context):
        if gateway is None:
            raise ExecutorError("debate needs a gateway")
        outcome = run_debate(
            state, request.instruction, n_claimsmiths, n_turns, gateway, lib
        )
        from .core import EvidenceRef

        evidence = [
            EvidenceRecord(
                ref=EvidenceRef(source="debate", snippet=outcome.topic[:200]),
                relevance=1.0,
                text=outcome.conclusion,
            )
        ]
        return state, DeltaSet(), evidence

    return {
        "prune": exec_prune,
        "expand_corpus": exec_expand_corpus,
        "expand_introspection": exec_expand_introspection,
        "debate": exec_debate,
    }


# --- game loop ---------------------------------------------------------------------


def _check_locality(
    before: HypothesisState, after: HypothesisState, region: frozenset[str]
) -> None:
    """Out-of-region fragments must survive byte-identical; edits stay inside."""
    before_by_id = {f.id: f for f in before.fragments}
    after_by_id = {f.id: f for f in after.fragments}
    for fid, frag in before_by_id.items():
        if fid in region:
            continue
        survivor = after_by_id.get(fid)
        if survivor is None:
            raise RegionViolation(f"fragment {fid} outside region was removed")
        if survivor != frag:
            raise RegionViolation(f"fragment {fid} outside region was modified")


_EXECUTOR_FAILURES = (ExecutorError, GatewayError, DebateError, StateError, MoveError)


def _run_game(
    config: GameConfig,
    initial: HypothesisState,
    controller: Controller,
    registry: MoveRegistry,
    executors: dict[str, Executor],
    context: Optional[Context],
    selector: Optional[Selector],
) -> Trajectory:
    initial.validate()
    for name in config.mode.allowed:
        if name not in registry:
            raise MoveError(f"mode allows unregistered move {name!r}")
    context = context or Context(task_goal=config.task_goal)
    localized = selector is not None

    state = initial
    rounds: list[RoundRecord] = []
    termination = None
    empty_streak = 0

    while len(rounds) < config.max_rounds:
        regions = None
        if localized:
            regions = selector(state)
            if not regions:
                raise StateError("selector must propose at least one region")
            for region in regions:
                region.validate_against(state)

        diagnosis = controller.diagnose(state, context, regions)
        if diagnosis.terminate:
            termination = "controller"
            break

        applied: list[AppliedMove] = []
        round_error: Optional[str] = None
        round_start = state
        try:
            check_budget(diagnosis.recommendations, config.budget, registry)
        except BudgetExceeded as exc:
            round_error = f"budget: {exc}"
        else:
            for request in diagnosis.recommendations:
                try:
                    atomic_names = registry.expand(request.move)
                except MoveError as exc:
                    round_error = f"move: {exc}"
                    break
                pair_start = state
                try:
                    for atomic in atomic_names:
                        if atomic not in executors:
                            raise ExecutorError(f"no executor wired for move {atomic!r}")
                        new_state, delta, evidence = executors[atomic](state, request, context)
                        if localized:
                            region_ids = (
                                request.target_region
                                if request.target_region
                                else frozenset(pair_start.ids)
                            )
                            _check_locality(state, new_state, region_ids)
                            new_state, cviols = enforce_consistency(
                                new_state, region_ids | delta.touched_ids
                            )
                            unrepaired = [v for v in cviols if not v.repaired]
                            if unrepaired:
                                raise RegionViolation(
                                    "; ".join(v.message for v in unrepaired)
                                )
                            delta = diff_states(state, new_state)
                        else:
                            new_state.validate()
                        applied.append(
                            AppliedMove(request=request, delta=delta, evidence=tuple(evidence))
                        )
                        state = new_state
                except RegionViolation as exc:
                    state = round_start
                    applied = []
                    round_error = f"region violation (round rolled back): {exc}"
                    break
                except ConsistencyError as exc:
                    state = round_start
                    applied = []
                    round_error = f"consistency (round rolled back): {exc}"
                    break
                except _EXECUTOR_FAILURES as exc:
                    round_error = f"executor {request.move}: {exc}"
                    break

        state = state.with_round(state.round + 1)
        rounds.append(
            RoundRecord(
                diagnosis=diagnosis,
                applied=tuple(applied),
                error=round_error,
                digest=state_digest(state),
            )
        )

        if all(a.delta.is_empty for a in applied):
            empty_streak += 1
        else:
            empty_streak = 0
        if empty_streak >= 2:
            termination = "stalled"
            break

    if termination is None:
        termination = "max_rounds" if len(rounds) >= config.max_rounds else "controller"

    return Trajectory(
        config=config,
        initial=initial,
        rounds=tuple(rounds),
        final=state,
        termination_reason=termination,
    )


def run_simple_game(
    config: GameConfig,
    initial: HypothesisState,
    controller: Controller,
    registry: MoveRegistry,
    executors: dict[str, Executor],
    context: Optional[Context] = None,
) -> Trajectory:
    """Whole-state refinement: diagnose, select moves, apply sequentially."""
    return _run_game(config, initial, controller, registry, executors, context, selector=None)


def run_localized_game(
    config: GameConfig,
    initial: HypothesisState,
    controller: Controller,
    selector: Selector,
    registry: MoveRegistry,
    executors: dict[str, Executor],
    context: Optional[Context] = None,
) -> Trajectory:
    """Region-confined refinement with per-pair consistency enforcement."""
    return _run_game(config, initial, controller, registry, executors, context, selector=selector)


def replay(trajectory: Trajectory, initial: HypothesisState) -> HypothesisState:
    """Re-apply every recorded delta; any divergence is an integrity error."""
    if trajectory.initial != initial:
        raise ReplayError("trajectory initial state does not match the supplied state")
    state = initial
    for index, record in enumerate(trajectory.rounds):
        for move in record.applied:
            try:
                state = apply_delta(state, move.delta)
            except StateError as exc:
                raise ReplayError(
                    f"round {index}: recorded delta no longer applies: {exc}", round_index=index
                ) from exc
        state = state.with_round(state.round + 1)
        if record.digest and state_digest(state) != record.digest:
            raise ReplayError(f"round {index}: replayed state diverges", round_index=index)
    if state != trajectory.final:
        raise ReplayError(
            f"replayed final state diverges from recorded final (after {len(trajectory.rounds)} rounds)",
            round_index=len(trajectory.rounds) - 1 if trajectory.rounds else None,
        )
    return state
