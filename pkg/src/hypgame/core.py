"""Hypothesis state: fragments, deltas, normalization, consistency repair.

A hypothesis is an ordered list of statement fragments. Every operation in
this module is a pure function returning new immutable values, so states can
be shared freely across concurrent games. Deltas are the only mutation
record: the engine stores one per applied move and replays them for audit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace as _dc_replace
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import ConsistencyError, StateError

FRAGMENT_KINDS = ("claim", "triple")
EVIDENCE_SOURCES = ("corpus_doc", "introspection", "debate", "seed_input")


def normalize_statement(text: str) -> str:
    """Canonical statement form: lowercase, single spaces, no terminal periods.

    Trailing periods (and any whitespace around them) are stripped until the
    result ends in neither, which makes the function idempotent.
    """
    return " ".join(text.lower().split()).rstrip(". ")


@dataclass(frozen=True)
class EvidenceRef:
    """Pointer from a fragment to where its content came from."""

    source: str
    doc_id: Optional[str] = None
    snippet: Optional[str] = None

    def __post_init__(self):
        if self.source not in EVIDENCE_SOURCES:
            raise StateError(f"unknown evidence source {self.source!r}")
        if self.source == "corpus_doc" and not self.doc_id:
            raise StateError("corpus_doc evidence requires a doc_id")

    def to_dict(self) -> dict:
        return {"source": self.source, "doc_id": self.doc_id, "snippet": self.snippet}

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceRef":
        return cls(source=d["source"], doc_id=d.get("doc_id"), snippet=d.get("snippet"))


@dataclass(frozen=True)
class Fragment:
    """One pathway statement: a text claim or a subject-relation-object triple.

    The id is an opaque token that stays stable across edits; replacing a
    fragment's text keeps its id so trajectories can reference it across
    rounds. Triples keep their text alongside the structured fields.
    """

    id: str
    text: str
    kind: str = "claim"
    subject: Optional[str] = None
    relation: Optional[str] = None
    object: Optional[str] = None
    provenance: tuple[EvidenceRef, ...] = ()
    step_index: int = 0

    def __post_init__(self):
        if not self.id:
            raise StateError("fragment id must be non-empty")
        if self.kind not in FRAGMENT_KINDS:
            raise StateError(f"unknown fragment kind {self.kind!r}")
        if not normalize_statement(self.text):
            raise StateError(f"fragment {self.id}: text empty after normalization")
        if self.kind == "triple" and not (self.subject and self.relation and self.object):
            raise StateError(f"fragment {self.id}: triple requires subject, relation, object")
        if self.step_index < 0:
            raise StateError(f"fragment {self.id}: negative step_index")
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def normalized(self) -> str:
        return normalize_statement(self.text)

    def with_text(self, text: str) -> "Fragment":
        """New fragment with replaced text, same id (and same step slot)."""
        return _dc_replace(self, text=text)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "text": self.text,
            "subject": self.subject,
            "relation": self.relation,
            "object": self.object,
            "provenance": [p.to_dict() for p in self.provenance],
            "step_index": self.step_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Fragment":
        return cls(
            id=d["id"],
            kind=d.get("kind", "claim"),
            text=d["text"],
            subject=d.get("subject"),
            relation=d.get("relation"),
            object=d.get("object"),
            provenance=tuple(EvidenceRef.from_dict(p) for p in d.get("provenance", [])),
            step_index=d.get("step_index", 0),
        )


def fragment_id_for(text: str, prefix: str = "h") -> str:
    """Deterministic opaque id derived from the normalized statement."""
    digest = hashlib.sha1(normalize_statement(text).encode("utf-8")).hexdigest()
    return f"{prefix}{digest[:10]}"


def make_fragment(
    text: str,
    *,
    id: Optional[str] = None,
    step_index: int = 0,
    provenance: Iterable[EvidenceRef] = (),
    kind: str = "claim",
    subject: Optional[str] = None,
    relation: Optional[str] = None,
    object: Optional[str] = None,
) -> Fragment:
    return Fragment(
        id=id or fragment_id_for(text),
        text=text,
        kind=kind,
        subject=subject,
        relation=relation,
        object=object,
        provenance=tuple(provenance),
        step_index=step_index,
    )


@dataclass(frozen=True)
class HypothesisState:
    """The evolving hypothesis: an ordered, deduplicated list of fragments.

    Structural invariants (distinct ids, strictly increasing step_index) are
    enforced on construction. The no-duplicate-text invariant is enforced at
    the operation boundaries (parse, apply_delta, executors); consistency
    repair may deliberately hand back a state that still carries a reported
    cross-region duplicate.
    """

    pathway_name: str
    fragments: tuple[Fragment, ...] = ()
    round: int = 0

    def __post_init__(self):
        object.__setattr__(self, "fragments", tuple(self.fragments))
        if self.round < 0:
            raise StateError("round must be non-negative")
        ids = [f.id for f in self.fragments]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise StateError(f"duplicate fragment ids: {dupes}")

    def validate(self) -> "HypothesisState":
        """Check the operation-boundary invariants; returns self when clean.

        Construction enforces only distinct ids; step ordering and text
        uniqueness are checked here so that consistency repair can receive
        (and fix) states a local rewrite left disordered.
        """
        steps = [f.step_index for f in self.fragments]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise StateError("step_index values must be strictly increasing in list order")
        self.check_no_duplicates()
        return self

    def check_no_duplicates(self) -> None:
        """Raise if two fragments share identical normalized text."""
        seen: dict[str, str] = {}
        for f in self.fragments:
            norm = f.normalized
            if norm in seen:
                raise StateError(
                    f"fragments {seen[norm]} and {f.id} share normalized text {norm!r}"
                )
            seen[norm] = f.id

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.fragments)

    def fragment(self, fragment_id: str) -> Fragment:
        for f in self.fragments:
            if f.id == fragment_id:
                return f
        raise StateError(f"unknown fragment id {fragment_id!r}")

    def has_fragment(self, fragment_id: str) -> bool:
        return any(f.id == fragment_id for f in self.fragments)

    def texts(self) -> list[str]:
        return [f.text for f in self.fragments]

    def with_round(self, round: int) -> "HypothesisState":
        return _dc_replace(self, round=round)

    def with_fragments(self, fragments: Sequence[Fragment]) -> "HypothesisState":
        return _dc_replace(self, fragments=tuple(fragments))

    def to_dict(self) -> dict:
        return {
            "pathway_name": self.pathway_name,
            "round": self.round,
            "fragments": [f.to_dict() for f in self.fragments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HypothesisState":
        return cls(
            pathway_name=d["pathway_name"],
            fragments=tuple(Fragment.from_dict(f) for f in d.get("fragments", [])),
            round=d.get("round", 0),
        )


@dataclass(frozen=True)
class Context:
    """Task framing shared by every move in a game."""

    task_goal: str
    priors: tuple[str, ...] = ()
    corpus_ref: Optional[str] = None

    def __post_init__(self):
        if not self.task_goal.strip():
            raise StateError("task_goal must be non-empty")
        object.__setattr__(self, "priors", tuple(self.priors))

    def to_dict(self) -> dict:
        return {
            "task_goal": self.task_goal,
            "priors": list(self.priors),
            "corpus_ref": self.corpus_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Context":
        return cls(
            task_goal=d["task_goal"],
            priors=tuple(d.get("priors", [])),
            corpus_ref=d.get("corpus_ref"),
        )


# --- deltas -----------------------------------------------------------------


@dataclass(frozen=True)
class AddOp:
    fragment: Fragment
    position: int

    def to_dict(self) -> dict:
        return {"op": "add", "fragment": self.fragment.to_dict(), "position": self.position}


@dataclass(frozen=True)
class RemoveOp:
    fragment_id: str

    def to_dict(self) -> dict:
        return {"op": "remove", "id": self.fragment_id}


@dataclass(frozen=True)
class ReplaceOp:
    fragment_id: str
    fragment: Fragment

    def to_dict(self) -> dict:
        return {"op": "replace", "id": self.fragment_id, "fragment": self.fragment.to_dict()}


DeltaOp = Union[AddOp, RemoveOp, ReplaceOp]


@dataclass(frozen=True)
class DeltaSet:
    """Recorded edit: removals, in-place replacements, then insertions.

    No id may be referenced by two conflicting operations. The one sanctioned
    double reference is remove-then-add of the same id, which encodes a moved
    fragment; application order (removes, replaces, adds) makes it
    unambiguous.
    """

    ops: tuple[DeltaOp, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        removed = [op.fragment_id for op in self.ops if isinstance(op, RemoveOp)]
        replaced = [op.fragment_id for op in self.ops if isinstance(op, ReplaceOp)]
        added = [op.fragment.id for op in self.ops if isinstance(op, AddOp)]
        touched = removed + replaced
        if len(touched) != len(set(touched)):
            raise StateError("delta references a fragment id twice")
        if len(added) != len(set(added)):
            raise StateError("delta adds a fragment id twice")
        if set(added) & set(replaced):
            raise StateError("delta both replaces and adds the same fragment id")
        for op in self.ops:
            if isinstance(op, ReplaceOp) and op.fragment.id != op.fragment_id:
                raise StateError("replace must preserve the fragment id")

    @property
    def is_empty(self) -> bool:
        return not self.ops

    @property
    def removed_ids(self) -> tuple[str, ...]:
        return tuple(op.fragment_id for op in self.ops if isinstance(op, RemoveOp))

    @property
    def replaced_ids(self) -> tuple[str, ...]:
        return tuple(op.fragment_id for op in self.ops if isinstance(op, ReplaceOp))

    @property
    def added_ids(self) -> tuple[str, ...]:
        return tuple(op.fragment.id for op in self.ops if isinstance(op, AddOp))

    @property
    def touched_ids(self) -> frozenset[str]:
        """Every fragment id this delta creates, rewrites, or removes."""
        return frozenset(self.removed_ids) | frozenset(self.replaced_ids) | frozenset(self.added_ids)

    def to_dict(self) -> dict:
        return {"ops": [op.to_dict() for op in self.ops]}

    @classmethod
    def from_dict(cls, d: dict) -> "DeltaSet":
        ops: list[DeltaOp] = []
        for o in d.get("ops", []):
            if o["op"] == "add":
                ops.append(AddOp(Fragment.from_dict(o["fragment"]), o["position"]))
            elif o["op"] == "remove":
                ops.append(RemoveOp(o["id"]))
            elif o["op"] == "replace":
                ops.append(ReplaceOp(o["id"], Fragment.from_dict(o["fragment"])))
            else:
                raise StateError(f"unknown delta op {o['op']!r}")
        return cls(ops=tuple(ops))


EMPTY_DELTA = DeltaSet()


# --- operations -------------------------------------------------------------


def parse_pathway(document: dict) -> HypothesisState:
    """Build the round-0 state from a pathway record {name, steps}.

    One claim fragment per step, ids s0..sN in step order, provenance marked
    as seed input. Rejects records with a missing name, an empty step list,
    or steps that collide after normalization (offending indices reported).
    """
    name = document.get("name")
    if not name or not str(name).strip():
        raise StateError("pathway record is missing a name")
    steps = document.get("steps")
    if not steps:
        raise StateError(f"pathway {name!r}: empty step list")

    seen: dict[str, int] = {}
    duplicates: list[tuple[int, int]] = []
    for i, step in enumerate(steps):
        norm = normalize_statement(str(step))
        if not norm:
            raise StateError(f"pathway {name!r}: step {i} empty after normalization")
        if norm in seen:
            duplicates.append((seen[norm], i))
        else:
            seen[norm] = i
    if duplicates:
        raise StateError(f"pathway {name!r}: duplicate steps after normalization at {duplicates}")

    fragments = tuple(
        Fragment(
            id=f"s{i}",
            text=str(step),
            kind="claim",
            provenance=(EvidenceRef(source="seed_input"),),
            step_index=i,
        )
        for i, step in enumerate(steps)
    )
    return HypothesisState(pathway_name=str(name), fragments=fragments, round=0)


def state_to_pathway(state: HypothesisState) -> dict:
    """Inverse of parse_pathway at the record level: {name, steps}."""
    return {"name": state.pathway_name, "steps": state.texts()}


def _lcs_ids(a: Sequence[str], b: Sequence[str]) -> list[str]:
    """Longest common subsequence of two id sequences."""
    n, m = len(a), len(b)
    lengths = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                lengths[i][j] = lengths[i + 1][j + 1] + 1
            else:
                lengths[i][j] = max(lengths[i + 1][j], lengths[i][j + 1])
    out: list[str] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            out.append(a[i])
            i += 1
            j += 1
        elif lengths[i + 1][j] >= lengths[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def diff_states(before: HypothesisState, after: HypothesisState) -> DeltaSet:
    """Minimal id-keyed delta such that apply_delta(before, delta) == after.

    Fragments present in both states and in the same relative order are kept
    (emitting a replace when their content changed); everything else becomes
    a removal or an insertion at its final position.
    """
    before_ids = [f.id for f in before.fragments]
    after_ids = [f.id for f in after.fragments]
    common = set(before_ids) & set(after_ids)
    kept = set(_lcs_ids([i for i in before_ids if i in common], [i for i in after_ids if i in common]))

    ops: list[DeltaOp] = []
    for f in before.fragments:
        if f.id not in kept:
            ops.append(RemoveOp(f.id))
    after_by_id = {f.id: f for f in after.fragments}
    for f in before.fragments:
        if f.id in kept and after_by_id[f.id] != f:
            ops.append(ReplaceOp(f.id, after_by_id[f.id]))
    for pos, f in enumerate(after.fragments):
        if f.id not in kept:
            ops.append(AddOp(f, pos))
    return DeltaSet(ops=tuple(ops))


def apply_delta(state: HypothesisState, delta: DeltaSet) -> HypothesisState:
    """Apply removes, then replaces, then position-ordered adds.

    Returns a new state with the same round. All referenced ids must exist,
    insert positions must be in bounds, and the resulting state must satisfy
    every hypothesis invariant (including no duplicate normalized text).
    """
    removes = {op.fragment_id for op in delta.ops if isinstance(op, RemoveOp)}
    replaces = {op.fragment_id: op.fragment for op in delta.ops if isinstance(op, ReplaceOp)}
    adds = sorted(
        (op for op in delta.ops if isinstance(op, AddOp)), key=lambda op: op.position
    )

    existing = set(state.ids)
    for fid in removes | set(replaces):
        if fid not in existing:
            raise StateError(f"delta references unknown fragment id {fid!r}")

    working: list[Fragment] = []
    for f in state.fragments:
        if f.id in removes:
            continue
        working.append(replaces.get(f.id, f))
    for op in adds:
        if not 0 <= op.position <= len(working):
            raise StateError(
                f"add position {op.position} out of bounds for list of {len(working)}"
            )
        working.insert(op.position, op.fragment)

    return state.with_fragments(working).validate()


@dataclass(frozen=True)
class Violation:
    """One consistency finding; repaired=False means the state still carries it."""

    kind: str
    fragment_ids: tuple[str, ...]
    message: str
    repaired: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "fragment_ids": list(self.fragment_ids),
            "message": self.message,
            "repaired": self.repaired,
        }


def enforce_consistency(
    state: HypothesisState, touched_region: Iterable[str]
) -> tuple[HypothesisState, list[Violation]]:
    """Repair a locally rewritten state without touching untouched fragments.

    Repairs are confined to the touched region: normalized-text duplicates
    inside the region are dropped, and in-region step_index values are
    renumbered to restore strict ordering. A duplicate spanning the region
    boundary cannot be repaired locally, so both fragments are retained and
    the violation reported. If ordering cannot be restored without
    renumbering an out-of-region fragment, ConsistencyError is raised.

    Fragments outside the region come back byte-identical.
    """
    region = frozenset(touched_region)
    violations: list[Violation] = []

    # Duplicate pass: first occurrence wins, later in-region copies dropped.
    kept: list[Fragment] = []
    first_by_norm: dict[str, Fragment] = {}
    for f in state.fragments:
        norm = f.normalized
        prior = first_by_norm.get(norm)
        if prior is None:
            first_by_norm[norm] = f
            kept.append(f)
            continue
        if f.id in region and prior.id in region:
            violations.append(
                Violation(
                    kind="duplicate_in_region",
                    fragment_ids=(prior.id, f.id),
                    message=f"dropped {f.id}: duplicate of {prior.id} inside region",
                    repaired=True,
                )
            )
            continue
        violations.append(
            Violation(
                kind="duplicate_crosses_region",
                fragment_ids=(prior.id, f.id),
                message=(
                    f"{f.id} duplicates {prior.id} across the region boundary; both retained"
                ),
                repaired=False,
            )
        )
        kept.append(f)

    # Ordering pass: only in-region step_index values may move. Each kept
    # position knows the step_index of the next out-of-region fragment after
    # it; in-region values get squeezed into the available integer gaps.
    next_out: list[Optional[int]] = [None] * len(kept)
    bound: Optional[int] = None
    for i in range(len(kept) - 1, -1, -1):
        next_out[i] = bound
        if kept[i].id not in region:
            bound = kept[i].step_index

    renumbered: list[Fragment] = []
    prev = -1
    for i, f in enumerate(kept):
        if f.id not in region:
            if f.step_index <= prev:
                raise ConsistencyError(
                    f"cannot restore step ordering without renumbering {f.id} outside region"
                )
            prev = f.step_index
            renumbered.append(f)
            continue
        idx = f.step_index
        limit = next_out[i]
        if idx <= prev or (limit is not None and idx >= limit):
            idx = prev + 1
            if limit is not None and idx >= limit:
                raise ConsistencyError(
                    f"no integer step_index available for {f.id} inside region"
                )
            f = _dc_replace(f, step_index=idx)
        prev = idx
        renumbered.append(f)

    return state.with_fragments(renumbered), violations


def resolve_targets(
    state: HypothesisState,
    targets: Union[Iterable[str], Callable[[Fragment], bool]],
) -> list[str]:
    """Resolve explicit ids or a match predicate to existing fragment ids."""
    if callable(targets):
        return [f.id for f in state.fragments if targets(f)]
    ids = list(targets)
    for fid in ids:
        if not state.has_fragment(fid):
            raise StateError(f"unknown fragment id {fid!r}")
    return ids
