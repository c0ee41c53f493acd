import json
import random
from pathlib import Path

import pytest

from hypgame import Corpus, Lexicon, MockGateway, parse_pathway
from hypgame.core import EvidenceRef, Fragment, HypothesisState, normalize_statement
from hypgame.corruption import load_bank

DATA = Path(__file__).parent / "data"

_WORDS = [
    "alpha", "beta", "gamma", "delta", "kinase", "channel", "protein",
    "binds", "activates", "inhibits", "imports", "cleaves", "exports",
    "complex", "membrane", "matrix", "substrate", "receptor",
]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.load(DATA / "lexicon.jsonl")


@pytest.fixture(scope="session")
def corpus() -> Corpus:
    return Corpus.load(DATA / "corpus.jsonl")


@pytest.fixture(scope="session")
def mito_record() -> dict:
    return json.loads((DATA / "pathway_mito_import.json").read_text())


@pytest.fixture()
def mito_pathway(mito_record):
    return parse_pathway(mito_record)


@pytest.fixture()
def mito_bank(lexicon):
    return load_bank(DATA / "bank_mito_import.jsonl", lexicon=lexicon)


def random_state(rng: random.Random, n_min: int = 1, n_max: int = 8, name: str = "rand") -> HypothesisState:
    """Valid random hypothesis state: unique ids, ordered steps, unique texts."""
    n = rng.randint(n_min, n_max)
    seen: set[str] = set()
    fragments = []
    while len(fragments) < n:
        text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(2, 6)))
        norm = normalize_statement(text)
        if norm in seen:
            continue
        seen.add(norm)
        provenance = (EvidenceRef(source="seed_input"),) if rng.random() < 0.7 else ()
        fragments.append(
            Fragment(
                id=f"f{len(fragments)}",
                text=text,
                provenance=provenance,
                step_index=len(fragments),
            )
        )
    return HypothesisState(pathway_name=name, fragments=tuple(fragments))


def random_edit(state: HypothesisState, rng: random.Random) -> HypothesisState:
    """Random valid successor state: drops, rewrites, inserts, reorders."""
    fragments = list(state.fragments)
    # drop some (never all)
    if len(fragments) > 1 and rng.random() < 0.6:
        keep = rng.sample(range(len(fragments)), k=rng.randint(1, len(fragments)))
        fragments = [fragments[i] for i in sorted(keep)]
    # rewrite some texts
    taken = {f.normalized for f in fragments}
    out = []
    for f in fragments:
        if rng.random() < 0.3:
            for _ in range(10):
                text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(2, 6)))
                norm = normalize_statement(text)
                if norm not in taken:
                    taken.discard(f.normalized)
                    taken.add(norm)
                    f = f.with_text(text)
                    break
        out.append(f)
    fragments = out
    # insert new fragments at random positions
    for _ in range(rng.randint(0, 2)):
        for _ in range(10):
            text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(2, 6)))
            norm = normalize_statement(text)
            if norm not in taken:
                taken.add(norm)
                fragments.insert(
                    rng.randint(0, len(fragments)),
                    Fragment(id=f"n{rng.randrange(10**9)}", text=text, step_index=0),
                )
                break
    # occasional swap (a move, encoded as remove+add by diff)
    if len(fragments) > 1 and rng.random() < 0.3:
        i, j = rng.sample(range(len(fragments)), 2)
        fragments[i], fragments[j] = fragments[j], fragments[i]
    # renumber to keep ordering strict
    fragments = [
        Fragment(
            id=f.id, text=f.text, kind=f.kind, subject=f.subject, relation=f.relation,
            object=f.object, provenance=f.provenance, step_index=i,
        )
        for i, f in enumerate(fragments)
    ]
    return state.with_fragments(fragments)


def echo_integrator(state, evidence, instruction):
    """Offline integrator: one deterministic addition per instruction."""
    return f"ADD: note that {instruction}"


def offline_gateway() -> MockGateway:
    """Mock gateway answering every prompt with fixed neutral text."""
    return MockGateway(default="No further changes are warranted.")
