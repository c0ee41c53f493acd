"""The fixed grammar of reasoning moves: registry, composition, budget.

Four atomic moves ship by default (prune, expand_corpus, expand_introspection,
debate). Composites are ordered sequences of registered atomics; the
per-round budget counts expanded atomic applications, so wrapping moves in
composites can never evade the cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import BudgetExceeded, MoveError

ATOMIC_MOVES = ("prune", "expand_corpus", "expand_introspection", "debate")


@dataclass(frozen=True)
class MoveSpec:
    """One registered reasoning operation, atomic or composite."""

    name: str
    kind: str = "atomic"
    components: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise MoveError("move name must be non-empty")
        if self.kind not in ("atomic", "composite"):
            raise MoveError(f"unknown move kind {self.kind!r}")
        object.__setattr__(self, "components", tuple(self.components))
        if self.kind == "composite" and not self.components:
            raise MoveError(f"composite move {self.name!r} needs components")
        if self.kind == "atomic" and self.components:
            raise MoveError(f"atomic move {self.name!r} cannot have components")

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "components": list(self.components)}

    @classmethod
    def from_dict(cls, d: dict) -> "MoveSpec":
        return cls(
            name=d["name"], kind=d.get("kind", "atomic"), components=tuple(d.get("components", []))
        )


@dataclass(frozen=True)
class MoveRequest:
    """A controller's concrete instruction to apply one registered move."""

    move: str
    instruction: str
    target_region: Optional[frozenset[str]] = None

    def __post_init__(self):
        if not self.move:
            raise MoveError("move name must be non-empty")
        if not self.instruction.strip():
            raise MoveError(f"request for {self.move!r} has an empty instruction")
        if self.target_region is not None:
            object.__setattr__(self, "target_region", frozenset(self.target_region))

    def to_dict(self) -> dict:
        return {
            "move": self.move,
            "instruction": self.instruction,
            "target_region": sorted(self.target_region) if self.target_region is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MoveRequest":
        region = d.get("target_region")
        return cls(
            move=d["move"],
            instruction=d["instruction"],
            target_region=frozenset(region) if region is not None else None,
        )


@dataclass(frozen=True)
class MoveBudget:
    """Cap on atomic move applications per round."""

    k_max: int = 4

    def __post_init__(self):
        if self.k_max < 1:
            raise MoveError("k_max must be at least 1")

    def to_dict(self) -> dict:
        return {"k_max": self.k_max}

    @classmethod
    def from_dict(cls, d: dict) -> "MoveBudget":
        return cls(k_max=d.get("k_max", 4))


@dataclass(frozen=True)
class MoveRegistry:
    """Immutable move lookup; register_move returns an extended copy."""

    specs: tuple[MoveSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        names = [s.name for s in self.specs]
        if len(names) != len(set(names)):
            raise MoveError("registry contains duplicate move names")

    def lookup(self, name: str) -> MoveSpec:
        for spec in self.specs:
            if spec.name == name:
                return spec
        raise MoveError(f"unknown move {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(s.name == name for s in self.specs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def atomic_count(self, name: str) -> int:
        """Number of atomic applications executing this move implies."""
        spec = self.lookup(name)
        if spec.kind == "atomic":
            return 1
        return sum(self.atomic_count(c) for c in spec.components)

    def expand(self, name: str) -> list[str]:
        """Left-to-right atomic move names a request for `name` executes."""
        spec = self.lookup(name)
        if spec.kind == "atomic":
            return [spec.name]
        out: list[str] = []
        for c in spec.components:
            out.extend(self.expand(c))
        return out

    def to_dict(self) -> dict:
        return {"moves": [s.to_dict() for s in self.specs]}

    @classmethod
    def from_dict(cls, d: dict) -> "MoveRegistry":
        registry = cls()
        for m in d.get("moves", []):
            registry = register_move(registry, MoveSpec.from_dict(m))
        return registry


def register_move(registry: MoveRegistry, spec: MoveSpec) -> MoveRegistry:
    """Add a move; composites may only reference already registered atomics."""
    if spec.name in registry:
        raise MoveError(f"move {spec.name!r} already registered")
    for component in spec.components:
        if component not in registry:
            raise MoveError(f"composite {spec.name!r} references unknown move {component!r}")
        if registry.lookup(component).kind != "atomic":
            raise MoveError(f"composite {spec.name!r} may only reference atomic moves")
    return MoveRegistry(specs=registry.specs + (spec,))


def default_registry() -> MoveRegistry:
    registry = MoveRegistry()
    for name in ATOMIC_MOVES:
        registry = register_move(registry, MoveSpec(name=name))
    return registry


def compose(moves: Sequence[MoveSpec], name: Optional[str] = None) -> MoveSpec:
    """Composite move executing the given atomic moves left to right."""
    if not moves:
        raise MoveError("cannot compose an empty move list")
    for m in moves:
        if m.kind != "atomic":
            raise MoveError(f"compose expects atomic moves, got composite {m.name!r}")
    return MoveSpec(
        name=name or "+".join(m.name for m in moves),
        kind="composite",
        components=tuple(m.name for m in moves),
    )


def count_atomic(requests: Iterable[MoveRequest], registry: MoveRegistry) -> int:
    return sum(registry.atomic_count(r.move) for r in requests)


def check_budget(
    requests: Sequence[MoveRequest], budget: MoveBudget, registry: MoveRegistry
) -> int:
    """Return the expanded atomic count, or raise BudgetExceeded.

    An empty request list passes; a round may be diagnostic-only.
    """
    count = count_atomic(requests, registry)
    if count > budget.k_max:
        raise BudgetExceeded(count, budget.k_max)
    return count
