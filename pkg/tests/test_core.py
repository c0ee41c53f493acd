import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypgame.core import (
    AddOp,
    DeltaSet,
    EvidenceRef,
    Fragment,
    HypothesisState,
    RemoveOp,
    ReplaceOp,
    apply_delta,
    diff_states,
    enforce_consistency,
    normalize_statement,
    parse_pathway,
    state_to_pathway,
)
from hypgame.errors import ConsistencyError, StateError

from conftest import random_edit, random_state


class TestNormalize:
    def test_rule_application(self):
        assert normalize_statement("  MPP cleaves  Peptide.") == "mpp cleaves peptide"

    def test_empty(self):
        assert normalize_statement("") == ""

    def test_lowercase(self):
        assert normalize_statement("A activates B") == "a activates b"

    @given(st.text(max_size=80))
    @settings(max_examples=300)
    def test_idempotent(self, text):
        once = normalize_statement(text)
        assert normalize_statement(once) == once


class TestParsePathway:
    def test_single_step(self):
        state = parse_pathway(
            {"name": "glycolysis-demo",
             "steps": ["ATP phosphorylates glucose to form glucose-6-phosphate."]}
        )
        assert len(state.fragments) == 1
        assert state.fragments[0].step_index == 0
        assert state.fragments[0].provenance[0].source == "seed_input"
        assert state.round == 0

    def test_empty_steps_rejected(self):
        with pytest.raises(StateError, match="empty step list"):
            parse_pathway({"name": "p", "steps": []})

    def test_missing_name_rejected(self):
        with pytest.raises(StateError, match="missing a name"):
            parse_pathway({"steps": ["A activates B"]})

    def test_duplicate_after_normalization_rejected(self):
        with pytest.raises(StateError, match=r"\(0, 1\)"):
            parse_pathway({"name": "p", "steps": ["A activates B", "A  activates B"]})

    def test_deterministic(self, mito_record):
        assert parse_pathway(mito_record) == parse_pathway(mito_record)

    def test_round_trip_to_record(self, mito_record):
        state = parse_pathway(mito_record)
        assert state_to_pathway(state) == {
            "name": mito_record["name"],
            "steps": mito_record["steps"],
        }


class TestStateInvariants:
    def test_duplicate_ids_rejected(self):
        f1 = Fragment(id="a", text="one thing", step_index=0)
        f2 = Fragment(id="a", text="another thing", step_index=1)
        with pytest.raises(StateError, match="duplicate fragment ids"):
            HypothesisState(pathway_name="p", fragments=(f1, f2))

    def test_validate_rejects_disorder(self):
        f1 = Fragment(id="a", text="one thing", step_index=3)
        f2 = Fragment(id="b", text="another thing", step_index=3)
        state = HypothesisState(pathway_name="p", fragments=(f1, f2))
        with pytest.raises(StateError, match="strictly increasing"):
            state.validate()

    def test_validate_rejects_duplicate_text(self):
        f1 = Fragment(id="a", text="Same thing", step_index=0)
        f2 = Fragment(id="b", text="same  thing.", step_index=1)
        state = HypothesisState(pathway_name="p", fragments=(f1, f2))
        with pytest.raises(StateError, match="share normalized text"):
            state.validate()

    def test_triple_requires_all_parts(self):
        with pytest.raises(StateError, match="triple requires"):
            Fragment(id="a", text="A activates B", kind="triple", subject="A")

    def test_corpus_evidence_requires_doc_id(self):
        with pytest.raises(StateError, match="doc_id"):
            EvidenceRef(source="corpus_doc")


class TestDiffApply:
    def test_identical_states_empty_delta(self):
        state = parse_pathway({"name": "p", "steps": ["A activates B", "B binds C"]})
        assert diff_states(state, state).is_empty

    def test_single_removal(self):
        before = parse_pathway({"name": "p", "steps": ["s one", "s two", "s three"]})
        after = before.with_fragments([before.fragments[0], before.fragments[1]])
        delta = diff_states(before, after)
        assert [op.fragment_id for op in delta.ops if isinstance(op, RemoveOp)] == ["s2"]
        assert len(delta.ops) == 1

    def test_replace_keeps_id(self):
        before = parse_pathway({"name": "p", "steps": ["s one", "s two"]})
        changed = before.fragments[1].with_text("s two prime")
        after = before.with_fragments([before.fragments[0], changed])
        delta = diff_states(before, after)
        assert len(delta.ops) == 1
        op = delta.ops[0]
        assert isinstance(op, ReplaceOp) and op.fragment_id == "s1"
        assert apply_delta(before, delta) == after

    def test_apply_empty_is_identity(self):
        state = parse_pathway({"name": "p", "steps": ["only step"]})
        assert apply_delta(state, DeltaSet()) == state

    def test_remove_unknown_id_rejected(self):
        state = parse_pathway({"name": "p", "steps": ["only step"]})
        with pytest.raises(StateError, match="unknown fragment id"):
            apply_delta(state, DeltaSet(ops=(RemoveOp("nope"),)))

    def test_add_duplicate_text_rejected(self):
        state = parse_pathway({"name": "p", "steps": ["only step"]})
        dup = Fragment(id="x", text="Only  step.", step_index=1)
        with pytest.raises(StateError, match="share normalized text"):
            apply_delta(state, DeltaSet(ops=(AddOp(dup, 1),)))

    def test_add_position_out_of_bounds(self):
        state = parse_pathway({"name": "p", "steps": ["only step"]})
        frag = Fragment(id="x", text="new step", step_index=2)
        with pytest.raises(StateError, match="out of bounds"):
            apply_delta(state, DeltaSet(ops=(AddOp(frag, 5),)))

    def test_conflicting_ops_rejected(self):
        frag = Fragment(id="a", text="thing", step_index=0)
        with pytest.raises(StateError, match="twice"):
            DeltaSet(ops=(RemoveOp("a"), ReplaceOp("a", frag)))

    def test_round_trip_randomized(self):
        rng = random.Random(20240817)
        for _ in range(300):
            before = random_state(rng, n_min=1, n_max=8)
            after = random_edit(before, rng)
            delta = diff_states(before, after)
            assert apply_delta(before, delta) == after

    def test_round_trip_reorder(self):
        before = parse_pathway({"name": "p", "steps": ["s one", "s two", "s three"]})
        frags = [before.fragments[2], before.fragments[0], before.fragments[1]]
        frags = [f.with_text(f.text) for f in frags]
        import dataclasses
        frags = [dataclasses.replace(f, step_index=i) for i, f in enumerate(frags)]
        after = before.with_fragments(frags)
        delta = diff_states(before, after)
        assert apply_delta(before, delta) == after

    def test_delta_reserialization(self):
        before = parse_pathway({"name": "p", "steps": ["s one", "s two"]})
        after = random_edit(before, random.Random(5))
        delta = diff_states(before, after)
        assert DeltaSet.from_dict(delta.to_dict()) == delta


class TestEnforceConsistency:
    def _state(self, texts, ids=None, steps=None):
        ids = ids or [f"f{i}" for i in range(len(texts))]
        steps = steps or list(range(len(texts)))
        return HypothesisState(
            pathway_name="p",
            fragments=tuple(
                Fragment(id=i, text=t, step_index=s) for i, t, s in zip(ids, texts, steps)
            ),
        )

    def test_clean_state_noop(self):
        state = self._state(["a thing", "b thing"])
        repaired, violations = enforce_consistency(state, {"f0"})
        assert repaired == state
        assert violations == []

    def test_duplicate_inside_region_dropped(self):
        state = self._state(["a thing", "b thing", "B  thing."], steps=[0, 1, 2])
        repaired, violations = enforce_consistency(state, {"f1", "f2"})
        assert [f.id for f in repaired.fragments] == ["f0", "f1"]
        assert len(violations) == 1
        assert violations[0].kind == "duplicate_in_region"
        assert violations[0].repaired

    def test_duplicate_across_region_retained(self):
        state = self._state(["a thing", "A thing."], steps=[0, 1])
        repaired, violations = enforce_consistency(state, {"f1"})
        assert [f.id for f in repaired.fragments] == ["f0", "f1"]
        assert len(violations) == 1
        assert violations[0].kind == "duplicate_crosses_region"
        assert not violations[0].repaired

    def test_renumbers_region_steps(self):
        state = self._state(["a thing", "b thing", "c thing"], steps=[0, 1, 1])
        repaired, violations = enforce_consistency(state, {"f2"})
        assert [f.step_index for f in repaired.fragments] == [0, 1, 2]
        assert violations == []
        repaired.validate()

    def test_out_of_region_untouched_bytes(self):
        state = self._state(["a thing", "b thing", "c thing"], steps=[0, 1, 1])
        repaired, _ = enforce_consistency(state, {"f2"})
        assert repaired.fragments[0] == state.fragments[0]
        assert repaired.fragments[1] == state.fragments[1]

    def test_unorderable_raises(self):
        # f1 (in region) is squeezed between out-of-region steps 0 and 1.
        state = self._state(["a thing", "b thing", "c thing"], steps=[0, 0, 1])
        with pytest.raises(ConsistencyError):
            enforce_consistency(state, {"f1"})
