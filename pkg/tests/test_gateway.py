import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from hypgame.core import Context
from hypgame.engine import Region
from hypgame.errors import GatewayError, StateError
from hypgame.gateway import (
    GATEWAY_KEY_ENV,
    GATEWAY_URL_ENV,
    PROMPT_NAMES,
    GatewayRequest,
    GatewayResponse,
    HttpGateway,
    MockGateway,
    PromptLibrary,
)


class TestRequestResponseInvariants:
    def test_empty_prompts_rejected(self):
        with pytest.raises(GatewayError):
            GatewayRequest(role_prompt="", user_prompt="x")
        with pytest.raises(GatewayError):
            GatewayRequest(role_prompt="x", user_prompt="  ")

    def test_negative_temperature_rejected(self):
        with pytest.raises(GatewayError):
            GatewayRequest(role_prompt="a", user_prompt="b", temperature=-0.5)

    def test_empty_text_needs_refusal_flag(self):
        with pytest.raises(GatewayError):
            GatewayResponse(text="")
        assert GatewayResponse(text="", refusal=True).refusal


class TestPromptLibrary:
    def test_all_templates_ship(self):
        library = PromptLibrary()
        for name in PROMPT_NAMES:
            assert library.raw(name)

    def test_render_substitutes_fields(self):
        library = PromptLibrary()
        text = library.render("diagnose", mode="validation", task_goal="repair",
                              pathway_name="demo", round=2, hypothesis="s0: a step")
        assert "validation" in text and "s0: a step" in text
        assert "$hypothesis" not in text

    def test_unknown_template_rejected(self):
        with pytest.raises(GatewayError, match="not found"):
            PromptLibrary().raw("no_such_prompt")


class _Handler(BaseHTTPRequestHandler):
    seen = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        _Handler.seen.append(
            {"body": body, "auth": self.headers.get("Authorization")}
        )
        payload = json.dumps({"text": f"echo: {body['user_prompt']}"}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.seen = []
    yield f"http://127.0.0.1:{server.server_port}/complete"
    server.shutdown()


class TestHttpGateway:
    def test_wire_contract(self, http_endpoint, monkeypatch):
        monkeypatch.setenv(GATEWAY_URL_ENV, http_endpoint)
        monkeypatch.setenv(GATEWAY_KEY_ENV, "secret-token")
        gateway = HttpGateway()
        response = gateway.complete(
            GatewayRequest(role_prompt="you are a judge", user_prompt="judge this",
                           temperature=0.2, seed_hint=7)
        )
        assert response.text == "echo: judge this"
        sent = _Handler.seen[0]
        assert sent["body"] == {
            "role_prompt": "you are a judge",
            "user_prompt": "judge this",
            "temperature": 0.2,
            "seed_hint": 7,
        }
        assert sent["auth"] == "Bearer secret-token"

    def test_missing_endpoint_is_configuration_error(self, monkeypatch):
        monkeypatch.delenv(GATEWAY_URL_ENV, raising=False)
        with pytest.raises(GatewayError, match=GATEWAY_URL_ENV):
            HttpGateway()

    def test_connection_failure_is_retriable(self):
        gateway = HttpGateway(url="http://127.0.0.1:9/unreachable", timeout=0.2)
        with pytest.raises(GatewayError) as err:
            gateway.complete(GatewayRequest(role_prompt="a", user_prompt="b"))
        assert err.value.retriable


class TestMockGatewayKeying:
    def test_exact_key_beats_script_and_default(self):
        gw = MockGateway(default="default").script("scripted")
        gw.add("role", "user", "exact")
        assert gw.complete(GatewayRequest(role_prompt="role", user_prompt="user")).text == "exact"
        assert gw.complete(GatewayRequest(role_prompt="r2", user_prompt="u2")).text == "scripted"
        assert gw.complete(GatewayRequest(role_prompt="r2", user_prompt="u2")).text == "default"

    def test_no_response_configured_fails(self):
        gw = MockGateway()
        with pytest.raises(GatewayError, match="no response"):
            gw.complete(GatewayRequest(role_prompt="a", user_prompt="b"))


class TestAuxiliaryInvariants:
    def test_context_requires_goal(self):
        with pytest.raises(StateError):
            Context(task_goal="   ")

    def test_region_must_be_nonempty(self):
        with pytest.raises(StateError):
            Region(frozenset())

    def test_region_validates_against_state(self, mito_pathway):
        Region(frozenset({"s0"})).validate_against(mito_pathway)
        with pytest.raises(StateError, match="unknown fragment ids"):
            Region(frozenset({"zz"})).validate_against(mito_pathway)
