"""Exception hierarchy shared across the package.

Everything raised on purpose derives from HypgameError so callers can
catch engine failures without swallowing genuine bugs.
"""

from __future__ import annotations


class HypgameError(Exception):
    """Base class for all errors raised by this package."""


class StateError(HypgameError):
    """Invalid hypothesis state, fragment, or delta operation."""


class ConsistencyError(StateError):
    """Consistency repair impossible without touching out-of-region fragments."""


class MoveError(HypgameError):
    """Invalid move registry operation or move request."""


class BudgetExceeded(MoveError):
    """A round requested more atomic operations than the budget allows."""

    def __init__(self, count: int, k_max: int):
        super().__init__(f"requested {count} atomic operations, budget allows {k_max}")
        self.count = count
        self.k_max = k_max


class GatewayError(HypgameError):
    """Model gateway unreachable or returned an unusable response."""

    def __init__(self, message: str, retriable: bool = True):
        super().__init__(message)
        self.retriable = retriable


class DebateError(HypgameError):
    """Debate protocol failure; carries whatever transcript was collected."""

    def __init__(self, message: str, transcript=None):
        super().__init__(message)
        self.transcript = list(transcript or [])


class ExecutorError(HypgameError):
    """A move executor failed; the round is recorded and skipped."""


class RegionViolation(HypgameError):
    """A localized executor edited fragments outside its target region."""


class ReplayError(HypgameError):
    """Trajectory replay diverged from the recorded states."""

    def __init__(self, message: str, round_index: int | None = None):
        super().__init__(message)
        self.round_index = round_index


class BankError(HypgameError):
    """Corruption bank file malformed or entry invalid."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class PlanError(HypgameError):
    """Corruption plan cannot be sampled or applied."""


class ScoreError(HypgameError):
    """Score vector undefined for the given inputs."""


class EvalError(HypgameError):
    """Metric undefined or judging failed; may carry partial results."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SpecError(HypgameError):
    """Experiment spec file invalid."""
