"""Task metrics: entity tagging and P/R/F1, error-removal and detailed-recall
judging, hypothesis drift, and Krippendorff's alpha for judge calibration.

Two judges ship side by side: a rule judge (substring logic over normalized
text, fully offline) and a gateway judge that asks the model with the shipped
prompts. Both answer the same questions so the pipeline runs with or without
a network.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .core import HypothesisState, normalize_statement
from .errors import EvalError, GatewayError, StateError
from .gateway import Gateway, GatewayRequest, PromptLibrary
from .serialize import read_jsonl

logger = logging.getLogger(__name__)

LEXICON_KINDS = ("gene", "complex", "family", "chemical")
RECALL_ATTRIBUTES = ("input_entities", "output_entities", "directionality", "reaction_type")

_EDGE_PUNCT = ".,;:()[]{}\"'!?"


def _tag_tokens(text: str) -> list[str]:
    """Tokens for entity matching: normalized, edge punctuation stripped."""
    tokens = []
    for raw in normalize_statement(text).split():
        token = raw.strip(_EDGE_PUNCT)
        if token:
            tokens.append(token)
    return tokens


@dataclass(frozen=True)
class LexiconEntry:
    surface: str
    canonical: str
    kind: str

    def __post_init__(self):
        if self.kind not in LEXICON_KINDS:
            raise StateError(f"lexicon entry {self.surface!r}: unknown kind {self.kind!r}")
        if not self.surface.strip() or not self.canonical.strip():
            raise StateError("lexicon entries need surface and canonical forms")


class Lexicon:
    """Surface-to-canonical entity dictionary with longest-match lookup."""

    def __init__(self, entries: Sequence[LexiconEntry]):
        self.entries = list(entries)
        if not self.entries:
            raise StateError("lexicon must be non-empty")
        self._by_tokens: dict[tuple[str, ...], LexiconEntry] = {}
        for entry in self.entries:
            key = tuple(_tag_tokens(entry.surface))
            if key:
                self._by_tokens.setdefault(key, entry)
        self.max_len = max(len(k) for k in self._by_tokens)

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        return cls(
            [
                LexiconEntry(surface=r["surface"], canonical=r["canonical"], kind=r["kind"])
                for r in read_jsonl(path)
            ]
        )

    def restrict(self, kinds: Sequence[str]) -> "Lexicon":
        wanted = set(kinds)
        kept = [e for e in self.entries if e.kind in wanted]
        if not kept:
            raise StateError(f"no lexicon entries of kinds {sorted(wanted)}")
        return Lexicon(kept)

    def match_at(self, tokens: Sequence[str], i: int) -> Optional[tuple[int, LexiconEntry]]:
        """Longest entry whose token sequence starts at position i."""
        top = min(self.max_len, len(tokens) - i)
        for length in range(top, 0, -1):
            entry = self._by_tokens.get(tuple(tokens[i : i + length]))
            if entry is not None:
                return length, entry
        return None


@dataclass(frozen=True)
class EntitySet:
    entities: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))

    def __len__(self) -> int:
        return len(self.entities)


def tag_entities(text: str, lexicon: Lexicon) -> EntitySet:
    """Greedy longest-match tagging over normalized tokens.

    At each position the longest matching surface wins and its span is
    consumed, so shorter matches inside it are not double counted. Output is
    the set of canonical names; casing and repeated whitespace in the input
    are irrelevant.
    """
    entities, _ = entity_profile(text, lexicon)
    return EntitySet(entities=entities)


def entity_profile(text: str, lexicon: Lexicon) -> tuple[frozenset[str], tuple[str, ...]]:
    """(canonical entity set, non-entity token sequence) of a statement."""
    tokens = _tag_tokens(text)
    found: set[str] = set()
    rest: list[str] = []
    i = 0
    while i < len(tokens):
        match = lexicon.match_at(tokens, i)
        if match is None:
            rest.append(tokens[i])
            i += 1
        else:
            length, entry = match
            found.add(entry.canonical)
            i += length
    return frozenset(found), tuple(rest)


def state_entities(state: HypothesisState, lexicon: Lexicon) -> EntitySet:
    out: set[str] = set()
    for f in state.fragments:
        out |= tag_entities(f.text, lexicon).entities
    return EntitySet(entities=out)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def entity_prf(reference: EntitySet, generated: EntitySet) -> PRF:
    """Set precision/recall/F1 with the empty-set conventions pinned.

    Both sets empty counts as perfect (1, 1, 1); an empty side against a
    non-empty one scores 0 for the affected measure.
    """
    ref, gen = reference.entities, generated.entities
    if not ref and not gen:
        return PRF(1.0, 1.0, 1.0)
    inter = len(ref & gen)
    precision = inter / len(gen) if gen else 0.0
    recall = inter / len(ref) if ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1)


# --- judges -------------------------------------------------------------------


@dataclass(frozen=True)
class JudgeVerdict:
    """One judged item: a persistence flag or four recall attribute flags."""

    item_id: str
    persists: Optional[bool] = None
    attributes: Optional[dict] = None

    def __post_init__(self):
        if (self.persists is None) == (self.attributes is None):
            raise EvalError("verdict must carry exactly one of persists / attributes")
        if self.attributes is not None:
            if set(self.attributes) != set(RECALL_ATTRIBUTES):
                raise EvalError(f"attributes must be exactly {RECALL_ATTRIBUTES}")
            object.__setattr__(
                self, "attributes", {k: bool(self.attributes[k]) for k in RECALL_ATTRIBUTES}
            )

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "persists": self.persists, "attributes": self.attributes}

    @classmethod
    def from_dict(cls, d: dict) -> "JudgeVerdict":
        return cls(
            item_id=d["item_id"], persists=d.get("persists"), attributes=d.get("attributes")
        )


class RuleJudge:
    """Deterministic substring judge over normalized text.

    Persistence: the corrupted statement persists iff it appears inside any
    output fragment while the original does not. Recall: a reaction present
    verbatim gets all four attributes; an absent one gets none.
    """

    def persistence(self, original: str, corrupted: str, output: HypothesisState) -> bool:
        norm_corrupted = normalize_statement(corrupted)
        norm_original = normalize_statement(original)
        texts = [f.normalized for f in output.fragments]
        has_corrupted = any(norm_corrupted in t for t in texts)
        has_original = bool(norm_original) and any(norm_original in t for t in texts)
        return has_corrupted and not has_original

    def reaction_attributes(self, reaction: str, output: HypothesisState) -> dict:
        norm = normalize_statement(reaction)
        present = any(norm in f.normalized for f in output.fragments)
        return {attr: present for attr in RECALL_ATTRIBUTES}


_VERDICT_RE = re.compile(r"VERDICT:\s*([01])")


class GatewayJudge:
    """LLM-as-judge using the shipped error-removal and recall prompts."""

    def __init__(self, gateway: Gateway, prompts: Optional[PromptLibrary] = None):
        self.gateway = gateway
        self.prompts = prompts or PromptLibrary()

    def persistence(self, original: str, corrupted: str, output: HypothesisState) -> bool:
        role = self.prompts.render(
            "llm_as_judge_error_removal",
            original=original,
            corrupted=corrupted,
            output="\n".join(output.texts()),
        )
        response = self.gateway.complete(
            GatewayRequest(role_prompt=role, user_prompt=corrupted)
        )
        m = _VERDICT_RE.search(response.text)
        if not m:
            raise EvalError(f"judge response missing VERDICT line: {response.text[:120]!r}")
        return m.group(1) == "1"

    def reaction_attributes(self, reaction: str, output: HypothesisState) -> dict:
        role = self.prompts.render(
            "llm_judge_pathway_recall",
            reaction=reaction,
            output="\n".join(output.texts()),
        )
        response = self.gateway.complete(GatewayRequest(role_prompt=role, user_prompt=reaction))
        labels = {}
        for attr in RECALL_ATTRIBUTES:
            m = re.search(rf"{attr.upper()}:\s*([01])", response.text)
            if not m:
                raise EvalError(f"judge response missing {attr} label")
            labels[attr] = m.group(1) == "1"
        return labels


def judge_persistence(original: str, corrupted: str, output: HypothesisState, judge) -> bool:
    """Did the injected corruption survive in the output?"""
    return judge.persistence(original, corrupted, output)


def error_removal_rate(verdicts: Sequence[JudgeVerdict]) -> float:
    """Fraction of judged corruptions no longer present."""
    if not verdicts:
        raise EvalError("error_removal_rate needs at least one verdict")
    flags = [v.persists for v in verdicts]
    if any(f is None for f in flags):
        raise EvalError("error_removal_rate needs persistence-shaped verdicts")
    return sum(1 for f in flags if not f) / len(flags)


def persistence_rate(verdicts: Sequence[JudgeVerdict]) -> float:
    return 1.0 - error_removal_rate(verdicts)


@dataclass(frozen=True)
class DetailedRecallReport:
    rates: dict
    verdicts: tuple[JudgeVerdict, ...]

    def to_dict(self) -> dict:
        return {"rates": self.rates, "verdicts": [v.to_dict() for v in self.verdicts]}


def detailed_recall(
    reference_reactions: Sequence[str], hypothesis: HypothesisState, judge
) -> DetailedRecallReport:
    """Per-attribute recall over the reference reactions.

    An absent reaction scores zero on all four attributes. A gateway failure
    raises EvalError carrying the verdicts collected so far.
    """
    if not reference_reactions:
        raise EvalError("detailed_recall needs at least one reference reaction")
    verdicts: list[JudgeVerdict] = []
    for i, reaction in enumerate(reference_reactions):
        try:
            attrs = judge.reaction_attributes(reaction, hypothesis)
        except GatewayError as exc:
            raise EvalError(
                f"judge failed on reaction {i}: {exc}", partial=tuple(verdicts)
            ) from exc
        verdicts.append(JudgeVerdict(item_id=f"reaction-{i}", attributes=attrs))
    rates = {
        attr: sum(1 for v in verdicts if v.attributes[attr]) / len(verdicts)
        for attr in RECALL_ATTRIBUTES
    }
    return DetailedRecallReport(rates=rates, verdicts=tuple(verdicts))


# --- drift and edit distance ----------------------------------------------------


def word_levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Minimal insert/delete/substitute count between word sequences."""
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    previous = list(range(m + 1))
    for i in range(1, n + 1):
        current = [i] + [0] * m
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
        previous = current
    return previous[m]


def levenshtein_word_norm(reference: str, generated: str) -> float:
    """Word-level edit distance divided by the reference word count."""
    ref_words = normalize_statement(reference).split()
    if not ref_words:
        raise EvalError("reference must contain at least one word")
    gen_words = normalize_statement(generated).split()
    return word_levenshtein(ref_words, gen_words) / len(ref_words)


def entity_drift(
    reference: HypothesisState,
    generated: HypothesisState,
    lexicon: Lexicon,
    kinds: Sequence[str] = ("gene",),
) -> dict:
    """Entities added and removed relative to the reference, by lexicon kind.

    Defaults to gene-level entries; pass kinds=LEXICON_KINDS for all."""
    scoped = lexicon.restrict(kinds)
    ref = state_entities(reference, scoped).entities
    gen = state_entities(generated, scoped).entities
    return {"added": len(gen - ref), "removed": len(ref - gen)}


# --- inter-rater agreement --------------------------------------------------------


@dataclass(frozen=True)
class LabelMatrix:
    """Rater-by-item nominal labels; None marks a missing rating."""

    raters: tuple[str, ...]
    items: tuple[str, ...]
    labels: tuple[tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "raters", tuple(self.raters))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "labels", tuple(tuple(row) for row in self.labels))
        if len(self.labels) != len(self.raters):
            raise EvalError("labels must have one row per rater")
        for row in self.labels:
            if len(row) != len(self.items):
                raise EvalError("every label row must cover every item")

    @classmethod
    def from_rows(cls, rows: dict) -> "LabelMatrix":
        raters = tuple(rows)
        lengths = {len(v) for v in rows.values()}
        if len(lengths) > 1:
            raise EvalError("raters disagree on item count")
        n = lengths.pop() if lengths else 0
        return cls(
            raters=raters,
            items=tuple(f"item-{i}" for i in range(n)),
            labels=tuple(tuple(rows[r]) for r in raters),
        )

    def unit_values(self) -> list[list]:
        """Non-missing labels per item, keeping only pairable units."""
        units = []
        for j in range(len(self.items)):
            values = [row[j] for row in self.labels if row[j] is not None]
            if len(values) >= 2:
                units.append(values)
        return units


def krippendorff_alpha(matrix: LabelMatrix) -> float:
    """Krippendorff's alpha for nominal labels via the coincidence matrix.

    Items rated by fewer than two raters are excluded; missing labels are
    fine. alpha = 1 - D_o / D_e where D_o is the within-unit disagreement
    mass and D_e the disagreement expected from the label margins. Zero
    label variation leaves D_e = 0 and alpha undefined.
    """
    if len(matrix.raters) < 2:
        raise EvalError("need at least two raters")
    units = matrix.unit_values()
    if len(units) < 2:
        raise EvalError("need at least two items with two or more ratings")

    coincidence: dict[tuple, float] = {}
    margins: dict = {}
    for values in units:
        m = len(values)
        for i, a in enumerate(values):
            margins[a] = margins.get(a, 0.0) + 1.0
            for j, b in enumerate(values):
                if i == j:
                    continue
                coincidence[(a, b)] = coincidence.get((a, b), 0.0) + 1.0 / (m - 1)

    n = sum(margins.values())
    d_observed = sum(v for (a, b), v in coincidence.items() if a != b) / n
    d_expected = sum(
        margins[a] * margins[b] for a in margins for b in margins if a != b
    ) / (n * (n - 1))
    if d_expected == 0:
        raise EvalError("alpha undefined: labels carry no variation")
    return 1.0 - d_observed / d_expected


def strict_consensus(annotator_1: Sequence, annotator_2: Sequence) -> list:
    """Conservative binary consensus: positive only when both raters are.

    Missing ratings stay missing. Built for calibrating an automated judge
    against a strict human reference."""
    if len(annotator_1) != len(annotator_2):
        raise EvalError("annotator label lists must align")
    out = []
    for a, b in zip(annotator_1, annotator_2):
        if a is None or b is None:
            out.append(None)
        else:
            out.append(1 if (a == 1 and b == 1) else 0)
    return out
