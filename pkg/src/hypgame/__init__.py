"""Deterministic engine and benchmark harness for hypothesis refinement games.

Hypotheses are ordered sets of statement fragments refined through a fixed
grammar of reasoning moves (prune, expand with corpus, expand with
introspection, debate) under a mode-conditioned controller. The harness
covers the full loop: corruption injection, game execution with replayable
trajectories, metric evaluation, and report aggregation.
"""

from .core import (
    Context,
    DeltaSet,
    EvidenceRef,
    Fragment,
    HypothesisState,
    apply_delta,
    diff_states,
    enforce_consistency,
    make_fragment,
    normalize_statement,
    parse_pathway,
    state_to_pathway,
)
from .moves import (
    MoveBudget,
    MoveRegistry,
    MoveRequest,
    MoveSpec,
    check_budget,
    compose,
    default_registry,
    register_move,
)
from .agents import (
    Corpus,
    CorpusDoc,
    DebateOutcome,
    EvidenceRecord,
    expand,
    prune,
    retrieve_corpus,
    retrieve_introspection,
    run_debate,
)
from .engine import (
    Diagnosis,
    GameConfig,
    GatewayController,
    Mode,
    PolicyController,
    Region,
    ScriptedController,
    Trajectory,
    build_executors,
    discovery_mode,
    per_fragment_selector,
    replay,
    run_localized_game,
    run_simple_game,
    sample_moves,
    sliding_window_selector,
    uniform_mode,
    validation_mode,
    whole_state_selector,
)
from .gateway import (
    GatewayRequest,
    GatewayResponse,
    HttpGateway,
    MockGateway,
    PromptLibrary,
)
from .scoring import ScoreVector, WeightVector, score_vector, utility
from .corruption import (
    CorruptionBank,
    CorruptionEntry,
    CorruptionPlan,
    CorruptionPolicy,
    apply_plan,
    load_bank,
    revert_plan,
    sample_plan,
    validate_corruption,
)
from .evaluation import (
    EntitySet,
    GatewayJudge,
    JudgeVerdict,
    LabelMatrix,
    Lexicon,
    LexiconEntry,
    RuleJudge,
    detailed_recall,
    entity_drift,
    entity_prf,
    error_removal_rate,
    judge_persistence,
    krippendorff_alpha,
    levenshtein_word_norm,
    strict_consensus,
    tag_entities,
)
from .batch import (
    ExperimentSpec,
    MetricReport,
    aggregate_report,
    bootstrap_ci,
    emit_report,
    evaluate_task,
    run_experiment_batch,
)

__version__ = "0.1.0"

__all__ = [
    "Context", "DeltaSet", "EvidenceRef", "Fragment", "HypothesisState",
    "apply_delta", "diff_states", "enforce_consistency", "make_fragment",
    "normalize_statement", "parse_pathway", "state_to_pathway",
    "MoveBudget", "MoveRegistry", "MoveRequest", "MoveSpec",
    "check_budget", "compose", "default_registry", "register_move",
    "Corpus", "CorpusDoc", "DebateOutcome", "EvidenceRecord",
    "expand", "prune", "retrieve_corpus", "retrieve_introspection", "run_debate",
    "Diagnosis", "GameConfig", "GatewayController", "Mode", "PolicyController",
    "Region", "ScriptedController", "Trajectory", "build_executors",
    "discovery_mode", "per_fragment_selector", "replay", "run_localized_game",
    "run_simple_game", "sample_moves", "sliding_window_selector", "uniform_mode",
    "validation_mode", "whole_state_selector",
    "GatewayRequest", "GatewayResponse", "HttpGateway", "MockGateway", "PromptLibrary",
    "ScoreVector", "WeightVector", "score_vector", "utility",
    "CorruptionBank", "CorruptionEntry", "CorruptionPlan", "CorruptionPolicy",
    "apply_plan", "load_bank", "revert_plan", "sample_plan", "validate_corruption",
    "EntitySet", "GatewayJudge", "JudgeVerdict", "LabelMatrix", "Lexicon",
    "LexiconEntry", "RuleJudge", "detailed_recall", "entity_drift", "entity_prf",
    "error_removal_rate", "judge_persistence", "krippendorff_alpha",
    "levenshtein_word_norm", "strict_consensus", "tag_entities",
    "ExperimentSpec", "MetricReport", "aggregate_report", "bootstrap_ci",
    "emit_report", "evaluate_task", "run_experiment_batch",
]
