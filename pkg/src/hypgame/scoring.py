"""Reporting-only score vector over hypothesis states.

Four components, all in [0, 1]: distance from known hypotheses, internal
diversity, entity-graph connectivity, and provenance coverage. They are
token-set instantiations chosen to be exact and auditable; none of the
shipped controllers consume them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import HypothesisState, normalize_statement
from .errors import ScoreError


@dataclass(frozen=True)
class ScoreVector:
    d_known: float
    delta_div: float
    l_connect: float
    t_frag: float

    def __post_init__(self):
        for name, value in self.to_dict().items():
            if not 0.0 <= value <= 1.0:
                raise ScoreError(f"{name}={value} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.d_known, self.delta_div, self.l_connect, self.t_frag)

    def to_dict(self) -> dict:
        return {
            "d_known": self.d_known,
            "delta_div": self.delta_div,
            "l_connect": self.l_connect,
            "t_frag": self.t_frag,
        }


@dataclass(frozen=True)
class WeightVector:
    beta: tuple[float, float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != 4:
            raise ScoreError("weight vector needs exactly 4 components")
        for b in self.beta:
            if not (b >= 0 and b == b and abs(b) != float("inf")):
                raise ScoreError(f"weight {b} must be finite and non-negative")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(normalize_statement(text).split())


def state_tokens(state: HypothesisState) -> frozenset[str]:
    out: set[str] = set()
    for f in state.fragments:
        out |= _tokens(f.text)
    return frozenset(out)


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def known_distance(state: HypothesisState, known: Sequence[HypothesisState]) -> float:
    """1 minus the best token-set Jaccard against any known hypothesis."""
    if not known:
        raise ScoreError("known hypothesis list must be non-empty")
    tokens = state_tokens(state)
    return 1.0 - max(jaccard(tokens, state_tokens(k)) for k in known)


def diversity(state: HypothesisState) -> float:
    """Mean pairwise token-set distance between fragments; 0 when singular."""
    frags = state.fragments
    if len(frags) < 2:
        return 0.0
    token_sets = [_tokens(f.text) for f in frags]
    total = 0.0
    pairs = 0
    for i in range(len(token_sets)):
        for j in range(i + 1, len(token_sets)):
            total += 1.0 - jaccard(token_sets[i], token_sets[j])
            pairs += 1
    return total / pairs


def connectivity(state: HypothesisState, lexicon) -> float:
    """Largest connected component share of the entity co-mention graph.

    Fragments act as hyperedges: every pair of entities mentioned in the
    same fragment is connected. States with at most one entity count as
    fully connected.
    """
    from .evaluation import tag_entities

    mentions = [sorted(tag_entities(f.text, lexicon).entities) for f in state.fragments]
    entities = sorted({e for m in mentions for e in m})
    if len(entities) <= 1:
        return 1.0
    adjacency: dict[str, set[str]] = {e: set() for e in entities}
    for group in mentions:
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                adjacency[group[i]].add(group[j])
                adjacency[group[j]].add(group[i])
    best = 0
    seen: set[str] = set()
    for start in entities:
        if start in seen:
            continue
        stack = [start]
        component = 0
        seen.add(start)
        while stack:
            node = stack.pop()
            component += 1
            for neighbor in adjacency[node]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        best = max(best, component)
    return best / len(entities)


def traceability(state: HypothesisState) -> float:
    """Fraction of fragments carrying non-empty provenance."""
    if not state.fragments:
        raise ScoreError("cannot score an empty state")
    backed = sum(1 for f in state.fragments if f.provenance)
    return backed / len(state.fragments)


def score_vector(
    state: HypothesisState, known: Sequence[HypothesisState], lexicon
) -> ScoreVector:
    if not state.fragments:
        raise ScoreError("cannot score an empty state")
    return ScoreVector(
        d_known=known_distance(state, known),
        delta_div=diversity(state),
        l_connect=connectivity(state, lexicon),
        t_frag=traceability(state),
    )


def utility(score: ScoreVector, weights: WeightVector) -> float:
    """Scalar utility: the weight vector dotted with the score vector."""
    return sum(b * s for b, s in zip(weights.beta, score.as_tuple()))
