import http.server
import json
import threading

import pytest

from mcpaudit.llm.config import Role, default_role_configs, load_role_configs
from mcpaudit.llm.gateway import (
    GatewayError,
    HttpProvider,
    LlmGateway,
    ScriptExhaustedError,
    ScriptedProvider,
)


def test_default_scheduler_temperature():
    configs = default_role_configs()
    assert configs[Role.MUTATION_SCHEDULER].temperature == 0.1
    assert configs[Role.MUTATION_SCHEDULER].max_output_tokens == 500


def test_default_validator_retry_temperature():
    configs = default_role_configs()
    validator = configs[Role.EXPLOIT_VALIDATOR]
    assert validator.temperature == 0.1
    assert validator.retry_temperature == 0.0
    assert validator.max_output_tokens == 700


def test_default_agent_token_budget():
    configs = default_role_configs()
    agent = configs[Role.SURROGATE_AGENT]
    assert agent.temperature == 0.7
    assert agent.max_output_tokens == 2000


def test_default_generator_and_mutator_settings():
    configs = default_role_configs()
    generator = configs[Role.PROMPT_GENERATOR]
    assert generator.temperature == 0.4
    assert generator.refinement_temperature == 0.7
    assert (generator.min_output_tokens, generator.max_output_tokens) == (500, 800)
    assert configs[Role.STRUCTURE_MUTATOR].temperature == 0.5
    assert configs[Role.PARAMETER_MUTATOR].temperature == 0.6
    assert configs[Role.STRUCTURE_MUTATOR].max_output_tokens == 1000
    optimizer = configs[Role.STRATEGY_OPTIMIZER]
    assert optimizer.temperature == 0.2
    assert (optimizer.min_output_tokens, optimizer.max_output_tokens) == (200, 500)


def test_config_file_merges_over_defaults(tmp_path):
    config = tmp_path / "roles.json"
    config.write_text(
        json.dumps(
            {"roles": {"surrogate_agent": {"model_id": "m-large", "temperature": 0.2}}}
        )
    )
    merged = load_role_configs(config)
    assert merged[Role.SURROGATE_AGENT].model_id == "m-large"
    assert merged[Role.SURROGATE_AGENT].temperature == 0.2
    assert merged[Role.SURROGATE_AGENT].max_output_tokens == 2000
    assert merged[Role.EXPLOIT_VALIDATOR].retry_temperature == 0.0


def _messages(text: str) -> list[dict[str, str]]:
    return [{"role": "user", "content": text}]


def test_scripted_ordinal_matching():
    provider = ScriptedProvider(
        [
            {"role": "exploit_validator", "match": 1, "response": '{"trigger_stage": "not_triggered"}'},
            {"role": "exploit_validator", "match": 2, "response": '{"trigger_stage": "sink_reached"}'},
        ]
    )
    gateway = LlmGateway(provider)
    first = gateway.complete(Role.EXPLOIT_VALIDATOR, _messages("x"))
    second = gateway.complete(Role.EXPLOIT_VALIDATOR, _messages("x"))
    assert "not_triggered" in first.text
    assert "sink_reached" in second.text


def test_scripted_pattern_beats_ordinal_and_is_reusable():
    provider = ScriptedProvider(
        [
            {"role": "surrogate_agent", "match": "marker", "response": "pattern"},
            {"role": "surrogate_agent", "match": 1, "response": "ordinal-1"},
            {"role": "surrogate_agent", "match": 2, "response": "ordinal-2"},
        ]
    )
    gateway = LlmGateway(provider)
    assert gateway.complete(Role.SURROGATE_AGENT, _messages("has marker")).text == "pattern"
    assert gateway.complete(Role.SURROGATE_AGENT, _messages("plain")).text == "ordinal-2"
    assert gateway.complete(Role.SURROGATE_AGENT, _messages("marker again")).text == "pattern"


def test_scripted_exhaustive_or_fail():
    gateway = LlmGateway(ScriptedProvider([]))
    with pytest.raises(ScriptExhaustedError):
        gateway.complete(Role.SURROGATE_AGENT, _messages("anything"))


def test_scripted_tool_calls_channel():
    provider = ScriptedProvider(
        [
            {
                "role": "surrogate_agent",
                "match": 1,
                "response": "",
                "tool_calls": [{"tool": "echo_text", "args": {"text": "hi"}}],
            }
        ]
    )
    exchange = LlmGateway(provider).complete(Role.SURROGATE_AGENT, _messages("x"))
    assert exchange.tool_calls == [{"tool": "echo_text", "args": {"text": "hi"}}]


def test_unknown_role_is_configuration_error():
    gateway = LlmGateway(ScriptedProvider([]), role_configs={})
    with pytest.raises(GatewayError):
        gateway.complete(Role.SURROGATE_AGENT, _messages("x"))


def test_token_accounting_sums_per_role():
    provider = ScriptedProvider(
        [
            {"role": "surrogate_agent", "match": "(?s).", "response": "four words are here"},
            {"role": "mutation_scheduler", "match": "(?s).", "response": "<STRUCTURE MUTATOR>"},
        ]
    )
    gateway = LlmGateway(provider)
    gateway.complete(Role.SURROGATE_AGENT, _messages("one two three"))
    gateway.complete(Role.SURROGATE_AGENT, _messages("one two"))
    gateway.complete(Role.MUTATION_SCHEDULER, _messages("a b"))
    usage = gateway.token_usage()
    assert usage["surrogate_agent"]["exchanges"] == 2
    assert usage["surrogate_agent"]["input"] == 5
    assert usage["surrogate_agent"]["output"] == 8
    assert usage["mutation_scheduler"]["exchanges"] == 1
    total_in = sum(u["input"] for u in usage.values())
    total_out = sum(u["output"] for u in usage.values())
    assert (total_in, total_out) == (7, 10)


class _FlakyHandler(http.server.BaseHTTPRequestHandler):
    failures = 2
    calls = 0

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        type(self).calls += 1
        if type(self).calls <= type(self).failures:
            self.send_response(500)
            self.end_headers()
            return
        body = json.dumps(
            {
                "choices": [{"message": {"content": "recovered"}}],
                "usage": {"prompt_tokens": 3, "completion_tokens": 1},
            }
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def flaky_endpoint():
    _FlakyHandler.calls = 0
    server = http.server.HTTPServer(("127.0.0.1", 0), _FlakyHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_http_provider_retries_then_succeeds(flaky_endpoint):
    provider = HttpProvider(flaky_endpoint, backoff=0.01)
    gateway = LlmGateway(provider)
    exchange = gateway.complete(Role.SURROGATE_AGENT, _messages("ping"))
    assert exchange.text == "recovered"
    assert provider.retry_count == 2
    assert exchange.input_tokens == 3


def test_http_provider_gives_up_after_retries(flaky_endpoint):
    _FlakyHandler.failures = 10
    try:
        provider = HttpProvider(flaky_endpoint, backoff=0.01, max_retries=2)
        with pytest.raises(GatewayError):
            provider.complete(
                default_role_configs()[Role.SURROGATE_AGENT], _messages("ping"), None, 0.7
            )
    finally:
        _FlakyHandler.failures = 2
