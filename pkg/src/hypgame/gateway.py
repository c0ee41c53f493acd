"""Model gateway: the one place network-backed text generation happens.

The wire contract is a JSON POST {role_prompt, user_prompt, temperature,
seed_hint} to the endpoint in HYPGAME_GATEWAY_URL with a bearer credential
from HYPGAME_GATEWAY_KEY, answered by JSON {text}.

MockGateway is a first-class offline implementation keyed by
(sha256(role_prompt), sha256(user_prompt)) with an optional scripted
fallback queue, so the entire engine and test suite run without a network.
"""

from __future__ import annotations

import hashlib
import logging
import os
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from string import Template
from typing import Optional, Protocol

from .errors import GatewayError

logger = logging.getLogger(__name__)

GATEWAY_URL_ENV = "HYPGAME_GATEWAY_URL"
GATEWAY_KEY_ENV = "HYPGAME_GATEWAY_KEY"

PROMPT_NAMES = (
    "diagnose",
    "move_selection",
    "retrieve_evidence",
    "speculate_evidence",
    "expand",
    "prune",
    "clash_of_claims_setup",
    "claimsmith",
    "clash_of_claims_conclude",
    "llm_as_judge_error_removal",
    "llm_judge_pathway_recall",
    "react",
    "chain_of_thought",
    "zero_shot",
    "user_prompt_reconstruction",
    "user_prompt_corruption",
)


@dataclass(frozen=True)
class GatewayRequest:
    role_prompt: str
    user_prompt: str
    temperature: float = 0.0
    seed_hint: Optional[int] = None

    def __post_init__(self):
        if not self.role_prompt.strip() or not self.user_prompt.strip():
            raise GatewayError("prompts must be non-empty", retriable=False)
        if self.temperature < 0:
            raise GatewayError("temperature must be >= 0", retriable=False)

    def to_dict(self) -> dict:
        return {
            "role_prompt": self.role_prompt,
            "user_prompt": self.user_prompt,
            "temperature": self.temperature,
            "seed_hint": self.seed_hint,
        }


@dataclass(frozen=True)
class GatewayResponse:
    text: str
    usage: Optional[dict] = None
    refusal: bool = False

    def __post_init__(self):
        if not self.text and not self.refusal:
            raise GatewayError("empty response text without a refusal flag", retriable=False)


class Gateway(Protocol):
    def complete(self, request: GatewayRequest) -> GatewayResponse: ...


class HttpGateway:
    """POSTs the wire-contract JSON to the configured endpoint."""

    def __init__(
        self,
        url: Optional[str] = None,
        key: Optional[str] = None,
        timeout: float = 60.0,
    ):
        self.url = url or os.environ.get(GATEWAY_URL_ENV)
        self.key = key or os.environ.get(GATEWAY_KEY_ENV)
        self.timeout = timeout
        if not self.url:
            raise GatewayError(
                f"no gateway endpoint: set {GATEWAY_URL_ENV} or pass url=", retriable=False
            )

    def complete(self, request: GatewayRequest) -> GatewayResponse:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        try:
            resp = requests.post(
                self.url, json=request.to_dict(), headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise GatewayError(f"gateway request failed: {exc}", retriable=True) from exc
        if resp.status_code != 200:
            raise GatewayError(
                f"gateway returned HTTP {resp.status_code}", retriable=resp.status_code >= 500
            )
        try:
            payload = resp.json()
        except ValueError as exc:
            raise GatewayError("gateway returned non-JSON body", retriable=False) from exc
        if "text" not in payload:
            raise GatewayError("gateway response missing 'text'", retriable=False)
        return GatewayResponse(
            text=payload["text"],
            usage=payload.get("usage"),
            refusal=bool(payload.get("refusal", False)),
        )


def _prompt_key(role_prompt: str, user_prompt: str) -> tuple[str, str]:
    return (
        hashlib.sha256(role_prompt.encode("utf-8")).hexdigest(),
        hashlib.sha256(user_prompt.encode("utf-8")).hexdigest(),
    )


class MockGateway:
    """Offline gateway with exact-prompt responses plus a scripted queue.

    Lookup order: exact (role, user) hash key, then the FIFO script queue,
    then the default response. With none available the call fails the same
    way an unreachable endpoint would.
    """

    def __init__(self, default: Optional[str] = None):
        self._canned: dict[tuple[str, str], str] = {}
        self._script: deque[str] = deque()
        self._default = default
        self.calls: list[GatewayRequest] = []

    def add(self, role_prompt: str, user_prompt: str, text: str) -> "MockGateway":
        self._canned[_prompt_key(role_prompt, user_prompt)] = text
        return self

    def script(self, *texts: str) -> "MockGateway":
        self._script.extend(texts)
        return self

    def complete(self, request: GatewayRequest) -> GatewayResponse:
        self.calls.append(request)
        key = _prompt_key(request.role_prompt, request.user_prompt)
        if key in self._canned:
            return GatewayResponse(text=self._canned[key])
        if self._script:
            return GatewayResponse(text=self._script.popleft())
        if self._default is not None:
            return GatewayResponse(text=self._default)
        raise GatewayError("mock gateway has no response for this prompt", retriable=False)


class FailingGateway:
    """Always raises; for exercising failure paths."""

    def __init__(self, message: str = "gateway timeout", retriable: bool = True):
        self.message = message
        self.retriable = retriable

    def complete(self, request: GatewayRequest) -> GatewayResponse:
        raise GatewayError(self.message, retriable=self.retriable)


class PromptLibrary:
    """Loads prompt templates from a directory of <name>.txt files.

    Templates use string.Template placeholders ($hypothesis, $instruction,
    ...) so literal braces in JSON examples survive. Unknown placeholders are
    left intact rather than raising; templates are operator-editable.
    """

    def __init__(self, directory: Optional[str | Path] = None):
        self.directory = Path(directory) if directory else Path(__file__).parent / "prompts"
        if not self.directory.is_dir():
            raise GatewayError(f"prompt directory {self.directory} not found", retriable=False)
        self._cache: dict[str, str] = {}

    def raw(self, name: str) -> str:
        if name not in self._cache:
            path = self.directory / f"{name}.txt"
            if not path.is_file():
                raise GatewayError(f"prompt template {name!r} not found in {self.directory}",
                                   retriable=False)
            self._cache[name] = path.read_text(encoding="utf-8")
        return self._cache[name]

    def render(self, name: str, **fields: object) -> str:
        return Template(self.raw(name)).safe_substitute(
            {k: str(v) for k, v in fields.items()}
        )
