"""Three-stage corruption pipeline: validated bank, seeded plan, application.

The bank holds pre-generated candidate errors anchored to pathway steps.
A policy (error type, difficulty, fraction, seed) deterministically selects
at most one corruption per step; application swaps or inserts statements and
returns full metadata so the corruption can be audited or reverted exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .core import Fragment, HypothesisState, normalize_statement
from .errors import BankError, PlanError
from .evaluation import Lexicon, entity_profile
from .serialize import read_jsonl

ERROR_TYPES = ("wrong_entity", "wrong_relation", "unsupported_step")
DIFFICULTIES = ("L1", "L2")
OPERATIONS = ("replace", "insert")


@dataclass(frozen=True)
class CorruptionEntry:
    """One pre-generated candidate error anchored to a pathway step."""

    pathway_id: str
    anchor_index: int
    error_type: str
    difficulty: str
    operation: str
    original: str
    corrupted: str

    def __post_init__(self):
        if self.error_type not in ERROR_TYPES:
            raise BankError(f"unknown error_type {self.error_type!r}")
        if self.difficulty not in DIFFICULTIES:
            raise BankError(f"unknown difficulty {self.difficulty!r}")
        if self.operation not in OPERATIONS:
            raise BankError(f"unknown operation {self.operation!r}")
        if self.anchor_index < 0:
            raise BankError("anchor_index must be non-negative")
        if not normalize_statement(self.corrupted):
            raise BankError("corrupted statement must be non-empty")
        if (self.error_type == "unsupported_step") != (self.operation == "insert"):
            raise BankError(
                f"error_type {self.error_type} incompatible with operation {self.operation}"
            )
        if self.operation == "insert" and self.original:
            raise BankError("insert entries must leave original empty")
        if self.operation == "replace":
            if not normalize_statement(self.original):
                raise BankError("replace entries need a non-empty original")
            if normalize_statement(self.original) == normalize_statement(self.corrupted):
                raise BankError("replace entries must change the statement")

    def to_dict(self) -> dict:
        return {
            "pathway_id": self.pathway_id,
            "anchor_index": self.anchor_index,
            "error_type": self.error_type,
            "difficulty": self.difficulty,
            "operation": self.operation,
            "original": self.original,
            "corrupted": self.corrupted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorruptionEntry":
        return cls(
            pathway_id=d["pathway_id"],
            anchor_index=d["anchor_index"],
            error_type=d["error_type"],
            difficulty=d["difficulty"],
            operation=d["operation"],
            original=d.get("original", ""),
            corrupted=d["corrupted"],
        )


def validate_corruption(entry: CorruptionEntry, lexicon: Lexicon) -> list[str]:
    """Check the per-type constraints; returns violations, never raises.

    wrong_entity: exactly one entity substituted, everything else verbatim.
    wrong_relation: entity set unchanged, at least one other token changed.
    unsupported_step: must be an insertion.
    """
    violations: list[str] = []
    if entry.error_type == "unsupported_step":
        if entry.operation != "insert":
            violations.append("unsupported_step must use the insert operation")
        return violations

    if entry.operation != "replace":
        violations.append(f"{entry.error_type} must use the replace operation")
        return violations

    orig_entities, orig_rest = entity_profile(entry.original, lexicon)
    corr_entities, corr_rest = entity_profile(entry.corrupted, lexicon)
    sym_diff = orig_entities ^ corr_entities

    if entry.error_type == "wrong_entity":
        if len(sym_diff) != 2 or len(orig_entities - corr_entities) != 1:
            violations.append(
                "wrong_entity must swap exactly one entity "
                f"(symmetric difference {sorted(sym_diff)} has size {len(sym_diff)})"
            )
        if orig_rest != corr_rest:
            violations.append("wrong_entity must keep all non-entity tokens unchanged")
    elif entry.error_type == "wrong_relation":
        if sym_diff:
            violations.append(
                f"wrong_relation must keep entities identical (changed: {sorted(sym_diff)})"
            )
        if orig_rest == corr_rest:
            violations.append("wrong_relation must change at least one non-entity token")
    return violations


class CorruptionBank:
    """Validated corruption entries indexed by pathway and anchor."""

    def __init__(self, entries: Sequence[CorruptionEntry]):
        self.entries = list(entries)
        self.by_pathway: dict[str, list[CorruptionEntry]] = {}
        self._index: dict[tuple[str, int, str, str], list[CorruptionEntry]] = {}
        for e in self.entries:
            self.by_pathway.setdefault(e.pathway_id, []).append(e)
            key = (e.pathway_id, e.anchor_index, e.error_type, e.difficulty)
            self._index.setdefault(key, []).append(e)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(
        self, pathway_id: str, anchor_index: int, error_type: str, difficulty: str
    ) -> list[CorruptionEntry]:
        return list(self._index.get((pathway_id, anchor_index, error_type, difficulty), []))

    def candidates(
        self, pathway_id: str, anchor_index: int, error_type: str, difficulty: str
    ) -> list[CorruptionEntry]:
        """Matching entries; error_type 'mixed' matches every type."""
        types = ERROR_TYPES if error_type == "mixed" else (error_type,)
        out: list[CorruptionEntry] = []
        for t in types:
            out.extend(self.lookup(pathway_id, anchor_index, t, difficulty))
        return out


def load_bank(path: str | Path, lexicon: Optional[Lexicon] = None) -> CorruptionBank:
    """Load and validate a JSONL corruption bank.

    Malformed lines and structurally invalid entries are rejected with their
    line number. With a lexicon, the per-type content constraints are
    enforced as well.
    """
    entries: list[CorruptionEntry] = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        try:
            entry = CorruptionEntry.from_dict(row)
        except (KeyError, TypeError) as exc:
            raise BankError(f"malformed entry: {exc}", line=lineno) from exc
        except BankError as exc:
            raise BankError(str(exc), line=lineno) from exc
        if lexicon is not None:
            violations = validate_corruption(entry, lexicon)
            if violations:
                raise BankError("; ".join(violations), line=lineno)
        entries.append(entry)
    return CorruptionBank(entries)


@dataclass(frozen=True)
class CorruptionPolicy:
    """Deterministic sampling policy for assembling a corrupted pathway."""

    error_type: str
    difficulty: str
    fraction: float
    seed: int
    fraction_cap: float = 0.4

    def __post_init__(self):
        if self.error_type not in ERROR_TYPES + ("mixed",):
            raise PlanError(f"unknown error_type {self.error_type!r}")
        if self.difficulty not in DIFFICULTIES:
            raise PlanError(f"unknown difficulty {self.difficulty!r}")
        if not 0.0 < self.fraction <= self.fraction_cap:
            raise PlanError(
                f"fraction {self.fraction} outside (0, {self.fraction_cap}]"
            )

    def to_dict(self) -> dict:
        return {
            "error_type": self.error_type,
            "difficulty": self.difficulty,
            "fraction": self.fraction,
            "seed": self.seed,
            "fraction_cap": self.fraction_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorruptionPolicy":
        return cls(
            error_type=d["error_type"],
            difficulty=d["difficulty"],
            fraction=d["fraction"],
            seed=d["seed"],
            fraction_cap=d.get("fraction_cap", 0.4),
        )


@dataclass(frozen=True)
class CorruptionPlan:
    policy: CorruptionPolicy
    selections: tuple[CorruptionEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "selections", tuple(self.selections))
        anchors = [s.anchor_index for s in self.selections]
        if len(anchors) != len(set(anchors)):
            raise PlanError("at most one corruption per step")
        pathways = {s.pathway_id for s in self.selections}
        if len(pathways) > 1:
            raise PlanError("plan mixes multiple pathways")

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.to_dict(),
            "selections": [s.to_dict() for s in self.selections],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorruptionPlan":
        return cls(
            policy=CorruptionPolicy.from_dict(d["policy"]),
            selections=tuple(CorruptionEntry.from_dict(s) for s in d.get("selections", [])),
        )


def corruption_count(fraction: float, n_steps: int) -> int:
    """Half-up rounding of fraction * n_steps, floored at one error."""
    return max(1, int(fraction * n_steps + 0.5))


def sample_plan(
    pathway: HypothesisState, bank: CorruptionBank, policy: CorruptionPolicy
) -> CorruptionPlan:
    """Seeded selection of corruptions for one pathway.

    Eligible anchors (steps with at least one matching bank entry) are
    shuffled with the policy seed and the first count are taken, then one
    candidate entry per anchor is drawn with the same stream. Pure in
    (pathway, bank, policy).
    """
    n_steps = len(pathway.fragments)
    if n_steps == 0:
        raise PlanError("pathway has no steps")
    count = corruption_count(policy.fraction, n_steps)

    eligible = [
        i
        for i in range(n_steps)
        if bank.candidates(pathway.pathway_name, i, policy.error_type, policy.difficulty)
    ]
    if len(eligible) < count:
        raise PlanError(
            f"need {count} corruptions for {pathway.pathway_name!r} "
            f"({policy.error_type}/{policy.difficulty}) but only {len(eligible)} "
            "anchors have matching bank entries"
        )

    rng = random.Random(policy.seed)
    shuffled = list(eligible)
    rng.shuffle(shuffled)
    chosen = sorted(shuffled[:count])

    selections = []
    for anchor in chosen:
        candidates = sorted(
            bank.candidates(pathway.pathway_name, anchor, policy.error_type, policy.difficulty),
            key=lambda e: (e.error_type, e.difficulty, normalize_statement(e.corrupted)),
        )
        selections.append(rng.choice(candidates))
    return CorruptionPlan(policy=policy, selections=tuple(selections))


@dataclass(frozen=True)
class AppliedCorruption:
    """Metadata for one applied corruption; enough to judge or revert it."""

    pathway_id: str
    anchor_index: int
    position: int
    fragment_id: str
    operation: str
    error_type: str
    difficulty: str
    original: str
    corrupted: str

    def to_dict(self) -> dict:
        return {
            "pathway_id": self.pathway_id,
            "anchor_index": self.anchor_index,
            "position": self.position,
            "fragment_id": self.fragment_id,
            "operation": self.operation,
            "error_type": self.error_type,
            "difficulty": self.difficulty,
            "original": self.original,
            "corrupted": self.corrupted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AppliedCorruption":
        return cls(**{k: d[k] for k in (
            "pathway_id", "anchor_index", "position", "fragment_id", "operation",
            "error_type", "difficulty", "original", "corrupted",
        )})


def apply_plan(
    pathway: HypothesisState, plan: CorruptionPlan
) -> tuple[HypothesisState, list[AppliedCorruption]]:
    """Apply a plan: replace swaps the anchored step text (id preserved),
    insert places the new statement immediately after its anchor.

    Untouched steps keep their id, text, and provenance byte-identical;
    step_index values after an insertion shift to keep ordering strict.
    Returns the corrupted state plus one metadata record per application.
    """
    n = len(pathway.fragments)
    by_anchor: dict[int, CorruptionEntry] = {}
    for entry in plan.selections:
        if entry.pathway_id != pathway.pathway_name:
            raise PlanError(
                f"entry for {entry.pathway_id!r} applied to {pathway.pathway_name!r}"
            )
        if not 0 <= entry.anchor_index < n:
            raise PlanError(f"anchor {entry.anchor_index} out of range for {n} steps")
        if entry.anchor_index in by_anchor:
            raise PlanError(f"two corruptions anchored to step {entry.anchor_index}")
        by_anchor[entry.anchor_index] = entry

    items: list[Fragment] = []
    records: list[AppliedCorruption] = []
    for i, frag in enumerate(pathway.fragments):
        entry = by_anchor.get(i)
        if entry is not None and entry.operation == "replace":
            if normalize_statement(entry.original) != frag.normalized:
                raise PlanError(
                    f"replace at step {i}: bank original does not match the pathway step"
                )
            replaced = frag.with_text(entry.corrupted)
            items.append(replaced)
            records.append(
                AppliedCorruption(
                    pathway_id=entry.pathway_id,
                    anchor_index=i,
                    position=len(items) - 1,
                    fragment_id=replaced.id,
                    operation="replace",
                    error_type=entry.error_type,
                    difficulty=entry.difficulty,
                    original=frag.text,
                    corrupted=entry.corrupted,
                )
            )
        else:
            items.append(frag)
        if entry is not None and entry.operation == "insert":
            inserted = Fragment(
                id=f"x{len(records)}_{frag.id}",
                text=entry.corrupted,
                provenance=(),
                step_index=0,  # renumbered below
            )
            items.append(inserted)
            records.append(
                AppliedCorruption(
                    pathway_id=entry.pathway_id,
                    anchor_index=i,
                    position=len(items) - 1,
                    fragment_id=inserted.id,
                    operation="insert",
                    error_type=entry.error_type,
                    difficulty=entry.difficulty,
                    original="",
                    corrupted=entry.corrupted,
                )
            )

    has_insert = any(r.operation == "insert" for r in records)
    if has_insert:
        # Inserts shift later positions; renumber so ordering stays strict.
        prev = -1
        renumbered = []
        for f in items:
            idx = f.step_index if f.step_index > prev else prev + 1
            if idx != f.step_index:
                from dataclasses import replace as _dc_replace

                f = _dc_replace(f, step_index=idx)
            prev = idx
            renumbered.append(f)
        items = renumbered

    corrupted = pathway.with_fragments(items).validate()
    return corrupted, records


def revert_plan(
    corrupted: HypothesisState, records: Sequence[AppliedCorruption]
) -> HypothesisState:
    """Undo applied corruptions using their metadata.

    Exact for pathways whose step_index equals list position (anything
    parse_pathway produced); inserted fragments are dropped and replaced
    texts restored in place.
    """
    inserted_ids = {r.fragment_id for r in records if r.operation == "insert"}
    restore = {r.fragment_id: r.original for r in records if r.operation == "replace"}

    fragments: list[Fragment] = []
    for f in corrupted.fragments:
        if f.id in inserted_ids:
            continue
        if f.id in restore:
            f = f.with_text(restore[f.id])
        fragments.append(f)

    if inserted_ids:
        from dataclasses import replace as _dc_replace

        fragments = [
            _dc_replace(f, step_index=i) if f.step_index != i else f
            for i, f in enumerate(fragments)
        ]
    return corrupted.with_fragments(fragments).validate()
