"""Walkthrough: the three-stage corruption benchmark pipeline.

Stage 1 is a validated bank of candidate errors anchored to pathway steps.
Stage 2 deterministically samples a plan (error type, difficulty, fraction,
seed). Stage 3 applies the plan and returns metadata precise enough to
audit or undo every injected error.
"""

from hypgame import parse_pathway
from hypgame.corruption import (
    CorruptionBank,
    CorruptionEntry,
    CorruptionPolicy,
    apply_plan,
    revert_plan,
    sample_plan,
    validate_corruption,
)
from hypgame.evaluation import Lexicon, LexiconEntry
from hypgame.serialize import stable_dumps

# --- 1. A reference pathway and a small corruption bank. ---------------------

pathway = parse_pathway({
    "name": "demo transport pathway",
    "steps": [
        "Carrier C1 imports substrate S into the cell",
        "Enzyme E1 phosphorylates substrate S",
        "Enzyme E2 cleaves the phosphorylated substrate",
        "Transporter T1 exports the cleaved product",
        "Phosphatase P1 recycles the carrier",
    ],
})

bank = CorruptionBank([
    # wrong relation: entities identical, the verb flips the meaning
    CorruptionEntry(
        pathway_id="demo transport pathway", anchor_index=0,
        error_type="wrong_relation", difficulty="L1", operation="replace",
        original="Carrier C1 imports substrate S into the cell",
        corrupted="Carrier C1 exports substrate S into the cell",
    ),
    # wrong entity: exactly one entity swapped, verb untouched
    CorruptionEntry(
        pathway_id="demo transport pathway", anchor_index=1,
        error_type="wrong_entity", difficulty="L2", operation="replace",
        original="Enzyme E1 phosphorylates substrate S",
        corrupted="Enzyme E2 phosphorylates substrate S",
    ),
    # unsupported step: an inserted statement that does not belong
    CorruptionEntry(
        pathway_id="demo transport pathway", anchor_index=3,
        error_type="unsupported_step", difficulty="L1", operation="insert",
        original="",
        corrupted="Chlorophyll grants the cell photosynthetic capacity",
    ),
])

# The bank validator checks each error class against its constraints.
lexicon = Lexicon([
    LexiconEntry(s, s, "gene") for s in ("C1", "E1", "E2", "T1", "P1")
] + [LexiconEntry("S", "substrate S", "chemical")])
for entry in bank.entries:
    assert validate_corruption(entry, lexicon) == []
print(f"bank of {len(bank)} entries validates cleanly")

# --- 2. Seeded sampling: same policy in, same plan out. -----------------------

policy = CorruptionPolicy(error_type="mixed", difficulty="L1", fraction=0.4, seed=99)
plan = sample_plan(pathway, bank, policy)
print(f"\npolicy {policy.error_type}/{policy.difficulty}, fraction {policy.fraction}:"
      f" {len(plan.selections)} corruption(s)")
for selection in plan.selections:
    print(f"  step {selection.anchor_index}: {selection.error_type} ({selection.operation})")

again = sample_plan(pathway, bank, policy)
assert stable_dumps(plan.to_dict()) == stable_dumps(again.to_dict())
print("resampling with the same seed is byte-identical")

# --- 3. Application produces the corrupted pathway plus full metadata. --------

corrupted, records = apply_plan(pathway, plan)
print("\ncorrupted pathway:")
marked = {r.position for r in records}
for i, fragment in enumerate(corrupted.fragments):
    flag = "  <-- injected" if i in marked else ""
    print(f"  {i}: {fragment.text}{flag}")

# Metadata is enough to reverse the corruption exactly.
assert revert_plan(corrupted, records) == pathway
print("\nreverting via metadata restores the original pathway exactly")
