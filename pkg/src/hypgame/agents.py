"""Executors for the four reasoning moves and the evidence types they share.

Each executor is a stateless function mapping (state, request inputs) to a
new state plus the delta and evidence it produced. All state mutation flows
through deltas; a debate only ever returns a recommendation, which the
engine may apply through a follow-up prune or expand.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from .core import (
    DeltaSet,
    EMPTY_DELTA,
    EvidenceRef,
    Fragment,
    HypothesisState,
    diff_states,
    enforce_consistency,
    fragment_id_for,
    normalize_statement,
    resolve_targets,
)
from .errors import DebateError, ExecutorError, GatewayError, StateError
from .gateway import Gateway, GatewayRequest, PromptLibrary
from .serialize import read_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvidenceRecord:
    """One piece of evidence an executor retrieved for the current move."""

    ref: EvidenceRef
    relevance: float
    text: str

    def __post_init__(self):
        if not 0.0 <= self.relevance <= 1.0:
            raise StateError(f"relevance {self.relevance} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"ref": self.ref.to_dict(), "relevance": self.relevance, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceRecord":
        return cls(ref=EvidenceRef.from_dict(d["ref"]), relevance=d["relevance"], text=d["text"])


@dataclass(frozen=True)
class TranscriptEntry:
    agent_index: int
    stance: str
    argument: str

    def to_dict(self) -> dict:
        return {"agent_index": self.agent_index, "stance": self.stance, "argument": self.argument}


@dataclass(frozen=True)
class DebateOutcome:
    topic: str
    transcript: tuple[TranscriptEntry, ...]
    conclusion: str
    recommended_delta: Optional[DeltaSet] = None

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "transcript": [t.to_dict() for t in self.transcript],
            "conclusion": self.conclusion,
            "recommended_delta": (
                self.recommended_delta.to_dict() if self.recommended_delta else None
            ),
        }


# --- corpus -----------------------------------------------------------------

CORPUS_KINDS = ("abstract", "fulltext")


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    title: str
    text: str
    kind: str = "abstract"

    def __post_init__(self):
        if self.kind not in CORPUS_KINDS:
            raise StateError(f"corpus doc {self.doc_id}: unknown kind {self.kind!r}")

    @property
    def tokens(self) -> list[str]:
        return normalize_statement(f"{self.title} {self.text}").split()


class Corpus:
    """In-memory document collection, loaded from JSONL."""

    def __init__(self, docs: Iterable[CorpusDoc] = ()):
        self.docs = list(docs)

    def __len__(self) -> int:
        return len(self.docs)

    @classmethod
    def load(cls, path: str | Path) -> "Corpus":
        docs = [
            CorpusDoc(
                doc_id=row["doc_id"],
                title=row.get("title", ""),
                text=row["text"],
                kind=row.get("kind", "abstract"),
            )
            for row in read_jsonl(path)
        ]
        return cls(docs)


def retrieve_corpus(query: str, corpus: Corpus, k: int) -> list[EvidenceRecord]:
    """Top-k documents by length-normalized token overlap.

    score(doc) = |query_tokens & doc_tokens| / sqrt(|doc_tokens|), computed
    on normalized whitespace tokens. Zero-overlap documents are not evidence
    and are dropped; ties break by ascending doc_id. The stored relevance is
    the score clamped into [0, 1] (ranking happens before clamping).
    """
    if k < 1:
        raise ExecutorError("k must be at least 1")
    query_tokens = set(normalize_statement(query).split())
    scored: list[tuple[float, str, CorpusDoc]] = []
    for doc in corpus.docs:
        doc_tokens = doc.tokens
        if not doc_tokens:
            continue
        overlap = len(query_tokens & set(doc_tokens))
        if overlap == 0:
            continue
        scored.append((overlap / math.sqrt(len(doc_tokens)), doc.doc_id, doc))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [
        EvidenceRecord(
            ref=EvidenceRef(source="corpus_doc", doc_id=doc.doc_id, snippet=doc.text[:200]),
            relevance=min(1.0, score),
            text=doc.text,
        )
        for score, _, doc in scored[:k]
    ]


def retrieve_introspection(
    query: str,
    gateway: Gateway,
    prompts: Optional[PromptLibrary] = None,
    task_goal: str = "",
) -> list[EvidenceRecord]:
    """One introspective evidence record wrapping the gateway's recall."""
    prompts = prompts or PromptLibrary()
    role = prompts.render("speculate_evidence", instruction=query, task_goal=task_goal)
    response = gateway.complete(GatewayRequest(role_prompt=role, user_prompt=query))
    if response.refusal or not response.text.strip():
        logger.warning("introspection refused for query %r", query)
        return []
    return [
        EvidenceRecord(
            ref=EvidenceRef(source="introspection", snippet=response.text[:200]),
            relevance=1.0,
            text=response.text,
        )
    ]


# --- edit command protocol ---------------------------------------------------

_ADD_RE = re.compile(r"^ADD:\s*(.+)$")
_REPLACE_RE = re.compile(r"^REPLACE\s+(\S+?):\s*(.+)$")
_REMOVE_RE = re.compile(r"^REMOVE\s+(\S+)\s*$")

EditCommand = tuple  # ("add", text) | ("replace", fid, text) | ("remove", fid)


def parse_edit_commands(text: str) -> list[EditCommand]:
    """Parse the ADD / REPLACE / REMOVE line protocol; other lines ignored."""
    commands: list[EditCommand] = []
    for line in text.splitlines():
        line = line.strip()
        m = _ADD_RE.match(line)
        if m:
            commands.append(("add", m.group(1).strip()))
            continue
        m = _REPLACE_RE.match(line)
        if m:
            commands.append(("replace", m.group(1), m.group(2).strip()))
            continue
        m = _REMOVE_RE.match(line)
        if m:
            commands.append(("remove", m.group(1)))
    return commands


# --- move executors -----------------------------------------------------------

Targets = Union[Iterable[str], Callable[[Fragment], bool]]


def prune(state: HypothesisState, targets: Targets) -> tuple[HypothesisState, DeltaSet]:
    """Remove the targeted fragments; every survivor stays byte-identical.

    Accepts explicit ids (unknown ids are an error) or a match predicate
    (matching nothing is a no-op). Refuses to empty the hypothesis.
    """
    ids = resolve_targets(state, targets)
    if not ids:
        return state, EMPTY_DELTA
    id_set = set(ids)
    if id_set >= set(state.ids):
        raise ExecutorError("pruning all fragments would leave an empty hypothesis")
    survivors = [f for f in state.fragments if f.id not in id_set]
    new_state = state.with_fragments(survivors)
    return new_state, diff_states(state, new_state)


Integrator = Union[Gateway, Callable[[HypothesisState, Sequence[EvidenceRecord], str], str]]


def _integration_commands(
    state: HypothesisState,
    evidence: Sequence[EvidenceRecord],
    instruction: str,
    integrator: Integrator,
    prompts: Optional[PromptLibrary],
) -> list[EditCommand]:
    if hasattr(integrator, "complete"):
        prompts = prompts or PromptLibrary()
        evidence_block = "\n".join(f"- {ev.text}" for ev in evidence) or "(no retrieved evidence)"
        role = prompts.render(
            "expand",
            instruction=instruction,
            evidence=evidence_block,
            pathway_name=state.pathway_name,
            hypothesis=format_state(state),
        )
        response = integrator.complete(GatewayRequest(role_prompt=role, user_prompt=instruction))
        return parse_edit_commands(response.text)
    return parse_edit_commands(integrator(state, evidence, instruction))


def expand(
    state: HypothesisState,
    evidence: Sequence[EvidenceRecord],
    instruction: str,
    integrator: Integrator,
    prompts: Optional[PromptLibrary] = None,
) -> tuple[HypothesisState, DeltaSet]:
    """Integrate evidence: append new fragments, rewrite targeted ones.

    New and rewritten fragments carry provenance for the supplied evidence
    (introspection when no evidence records were given). Edits that would
    duplicate an existing normalized statement are dropped and logged.
    Consistency is enforced on the touched region before returning.
    """
    if not instruction.strip():
        raise ExecutorError("expand requires a non-empty instruction")
    commands = _integration_commands(state, evidence, instruction, integrator, prompts)

    refs = tuple(ev.ref for ev in evidence) or (EvidenceRef(source="introspection"),)
    working = list(state.fragments)
    norms = {f.normalized: f.id for f in working}
    next_step = max((f.step_index for f in working), default=-1) + 1

    for cmd in commands:
        if cmd[0] == "add":
            text = cmd[1]
            norm = normalize_statement(text)
            if not norm:
                continue
            if norm in norms:
                logger.warning("expand: dropped duplicate of %s: %r", norms[norm], text)
                continue
            frag = Fragment(
                id=fragment_id_for(text),
                text=text,
                provenance=refs,
                step_index=next_step,
            )
            if any(f.id == frag.id for f in working):
                logger.warning("expand: dropped add with colliding id %s", frag.id)
                continue
            working.append(frag)
            norms[norm] = frag.id
            next_step += 1
        elif cmd[0] == "replace":
            fid, text = cmd[1], cmd[2]
            norm = normalize_statement(text)
            pos = next((i for i, f in enumerate(working) if f.id == fid), None)
            if pos is None:
                logger.warning("expand: dropped replace of unknown fragment %s", fid)
                continue
            if not norm:
                continue
            if norms.get(norm, fid) != fid:
                logger.warning("expand: dropped replace duplicating %s", norms[norm])
                continue
            old = working[pos]
            del norms[old.normalized]
            new_frag = Fragment(
                id=old.id,
                text=text,
                kind=old.kind,
                subject=old.subject,
                relation=old.relation,
                object=old.object,
                provenance=refs,
                step_index=old.step_index,
            )
            working[pos] = new_frag
            norms[norm] = fid
        # "remove" commands are not part of expand's contract; ignore them.

    new_state = state.with_fragments(working)
    delta = diff_states(state, new_state)
    if not delta.is_empty:
        new_state, _ = enforce_consistency(new_state, delta.touched_ids)
        delta = diff_states(state, new_state)
    return new_state, delta


def run_debate(
    state: HypothesisState,
    topic: str,
    n_claimsmiths: int,
    n_turns: int,
    gateway: Gateway,
    prompts: Optional[PromptLibrary] = None,
) -> DebateOutcome:
    """Three-phase debate: setup stances, clash of claims, conclude.

    Every claimsmith argues exactly n_turns times, gathered round-robin, so
    |transcript| == n_claimsmiths * n_turns. The conclusion may carry a
    recommended delta; applying it is the engine's decision, never ours.
    A gateway failure mid-debate raises DebateError holding the partial
    transcript.
    """
    if not topic.strip():
        raise DebateError("debate topic must be non-empty")
    if n_claimsmiths < 2:
        raise DebateError(f"need at least 2 claimsmiths, got {n_claimsmiths}")
    if n_turns < 1:
        raise DebateError(f"need at least 1 turn, got {n_turns}")
    prompts = prompts or PromptLibrary()
    hypothesis = format_state(state)

    transcript: list[TranscriptEntry] = []
    try:
        setup_role = prompts.render(
            "clash_of_claims_setup",
            topic=topic,
            pathway_name=state.pathway_name,
            hypothesis=hypothesis,
            n_claimsmiths=n_claimsmiths,
        )
        setup = gateway.complete(GatewayRequest(role_prompt=setup_role, user_prompt=topic))
        stances = _parse_stances(setup.text, n_claimsmiths)

        for _ in range(n_turns):
            for i in range(n_claimsmiths):
                role = prompts.render(
                    "claimsmith",
                    agent_index=i,
                    topic=topic,
                    stance=stances[i],
                    pathway_name=state.pathway_name,
                    hypothesis=hypothesis,
                    transcript=format_transcript(transcript),
                )
                reply = gateway.complete(GatewayRequest(role_prompt=role, user_prompt=topic))
                transcript.append(
                    TranscriptEntry(agent_index=i, stance=stances[i], argument=reply.text.strip())
                )

        conclude_role = prompts.render(
            "clash_of_claims_conclude",
            topic=topic,
            pathway_name=state.pathway_name,
            hypothesis=hypothesis,
            transcript=format_transcript(transcript),
        )
        verdict = gateway.complete(GatewayRequest(role_prompt=conclude_role, user_prompt=topic))
    except GatewayError as exc:
        raise DebateError(f"gateway failed mid-debate: {exc}", transcript=transcript) from exc

    conclusion, recommended = _parse_conclusion(verdict.text, state)
    return DebateOutcome(
        topic=topic,
        transcript=tuple(transcript),
        conclusion=conclusion,
        recommended_delta=recommended,
    )


def _parse_stances(text: str, n: int) -> list[str]:
    stances = [
        line.split(":", 1)[1].strip()
        for line in text.splitlines()
        if line.strip().upper().startswith("STANCE:") and line.split(":", 1)[1].strip()
    ]
    stances = stances[:n]
    while len(stances) < n:
        stances.append(f"Alternative position {len(stances)}")
    seen: set[str] = set()
    distinct = []
    for i, s in enumerate(stances):
        if s in seen:
            s = f"{s} (position {i})"
        seen.add(s)
        distinct.append(s)
    return distinct


def _parse_conclusion(text: str, state: HypothesisState) -> tuple[str, Optional[DeltaSet]]:
    conclusion = ""
    for line in text.splitlines():
        if line.strip().upper().startswith("CONCLUSION:"):
            conclusion = line.split(":", 1)[1].strip()
            break
    if not conclusion:
        conclusion = text.strip()

    commands = parse_edit_commands(text)
    if not commands:
        return conclusion, None
    from .core import AddOp, RemoveOp, ReplaceOp

    removes: list[RemoveOp] = []
    replaces: list[ReplaceOp] = []
    adds: list[Fragment] = []
    next_step = max((f.step_index for f in state.fragments), default=-1) + 1
    touched: set[str] = set()
    for cmd in commands:
        if cmd[0] == "remove" and state.has_fragment(cmd[1]) and cmd[1] not in touched:
            removes.append(RemoveOp(cmd[1]))
            touched.add(cmd[1])
        elif cmd[0] == "replace" and state.has_fragment(cmd[1]) and cmd[1] not in touched:
            old = state.fragment(cmd[1])
            replaces.append(
                ReplaceOp(
                    cmd[1],
                    Fragment(
                        id=cmd[1],
                        text=cmd[2],
                        provenance=(EvidenceRef(source="debate"),),
                        step_index=old.step_index,
                    ),
                )
            )
            touched.add(cmd[1])
        elif cmd[0] == "add":
            frag = Fragment(
                id=fragment_id_for(cmd[1]),
                text=cmd[1],
                provenance=(EvidenceRef(source="debate"),),
                step_index=next_step,
            )
            if frag.id in touched:
                continue
            adds.append(frag)
            touched.add(frag.id)
            next_step += 1
    # Additions land at the end of the post-removal list.
    base = len(state.fragments) - len(removes)
    add_ops = [AddOp(frag, base + i) for i, frag in enumerate(adds)]
    ops = removes + replaces + add_ops
    return conclusion, DeltaSet(ops=tuple(ops)) if ops else None


# --- shared formatting --------------------------------------------------------


def format_state(state: HypothesisState) -> str:
    """Fragment listing used in prompts: one `id: text` line per fragment."""
    return "\n".join(f"{f.id}: {f.text}" for f in state.fragments)


def format_transcript(transcript: Sequence[TranscriptEntry]) -> str:
    if not transcript:
        return "(no arguments yet)"
    return "\n".join(f"[claimsmith {t.agent_index}] {t.argument}" for t in transcript)
