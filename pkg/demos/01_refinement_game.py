"""Walkthrough: hypothesis states, reasoning moves, and a full game.

A hypothesis is an ordered set of statement fragments. A game refines it
through four moves (prune, expand with corpus, expand with introspection,
debate) chosen by a controller each round. Everything below runs offline:
the model gateway is a scripted mock and evidence integration is a
deterministic template.
"""

from hypgame import (
    Corpus,
    CorpusDoc,
    GameConfig,
    Lexicon,
    LexiconEntry,
    MockGateway,
    MoveBudget,
    MoveRequest,
    ScriptedController,
    build_executors,
    default_registry,
    diff_states,
    parse_pathway,
    replay,
    run_simple_game,
    uniform_mode,
)
from hypgame.scoring import score_vector

# --- 1. A hypothesis state is parsed from a plain pathway record. -----------

record = {
    "name": "toy signalling pathway",
    "steps": [
        "Receptor R1 binds ligand L",
        "R1 phosphorylates kinase K1",
        "K1 exports transcription factor T out of the nucleus",  # wrong direction
        "Ribosomes assemble on the plasma membrane",             # does not belong
    ],
}
state = parse_pathway(record)
print("initial hypothesis:")
for fragment in state.fragments:
    print(f"  {fragment.id}: {fragment.text}")

# --- 2. Wire executors: a tiny corpus plus a scripted mock gateway. ----------

corpus = Corpus([
    CorpusDoc(
        doc_id="doc-1",
        title="K1 controls nuclear import",
        text="Phosphorylated K1 imports transcription factor T into the nucleus.",
    ),
])

# The mock answers the one expand call of round 2 with an edit command.
gateway = MockGateway(default="NO EDITS").script(
    "REPLACE s2: K1 imports transcription factor T into the nucleus",
)
executors = build_executors(corpus=corpus, gateway=gateway, integrator=gateway)

# --- 3. A scripted controller plays two rounds, then terminates. -------------

plan = [
    [MoveRequest(move="prune", instruction="remove the ribosome statement",
                 target_region=frozenset({"s3"}))],
    [MoveRequest(move="expand_corpus",
                 instruction="fix the transport direction of K1 and T")],
]
config = GameConfig(
    mode=uniform_mode(["prune", "expand_corpus", "expand_introspection", "debate"]),
    budget=MoveBudget(k_max=4),
    max_rounds=4,
    seed=0,
    task_goal="repair the pathway",
)
trajectory = run_simple_game(
    config, state, ScriptedController(plan), registry=default_registry(),
    executors=executors,
)

print("\nrounds played:")
for i, round_record in enumerate(trajectory.rounds):
    moves = ", ".join(a.request.move for a in round_record.applied) or "(none)"
    print(f"  round {i}: {moves}")

print("\nfinal hypothesis:")
for fragment in trajectory.final.fragments:
    print(f"  {fragment.id}: {fragment.text}")

# --- 4. Trajectories are replayable audit logs. ------------------------------

assert replay(trajectory, state) == trajectory.final
print("\nreplay(initial, recorded deltas) reproduces the final state exactly")

delta = diff_states(state, trajectory.final)
print(f"net change: {len(delta.removed_ids)} removed, "
      f"{len(delta.replaced_ids)} rewritten, {len(delta.added_ids)} added")

# --- 5. Reporting-only scores over the final state. --------------------------

lexicon = Lexicon([
    LexiconEntry("R1", "R1", "gene"),
    LexiconEntry("K1", "K1", "gene"),
    LexiconEntry("L", "ligand L", "chemical"),
    LexiconEntry("T", "factor T", "gene"),
])
scores = score_vector(trajectory.final, known=[state], lexicon=lexicon)
print("\nscore vector (distance-from-known, diversity, connectivity, traceability):")
print(f"  {scores.as_tuple()}")
