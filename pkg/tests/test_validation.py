import json

import pytest
from hypothesis import given, strategies as st

from mcpaudit.anchor.types import VulnClass
from mcpaudit.feedback.validation import (
    TriggerStage,
    ValidatorVerdict,
    repair_verdict,
    validate_llm,
    validate_rule_based,
    verdict_from_stage,
)
from mcpaudit.llm.gateway import LlmGateway, ScriptedProvider

from builders import chain, evidence, hit, packet

CMDI = VulnClass.COMMAND_INJECTION
SSRF = VulnClass.SSRF
PATH = VulnClass.PATH_INJECTION

CMDI_CHAIN = chain(tool="run_diagnostics", vuln=CMDI)


# -- staged fixtures, one per stage of the ordered scale -----------------------

STAGE_FIXTURES = {
    TriggerStage.NOT_TRIGGERED: evidence(prompt="hi", agent_response="hello", trace=[]),
    TriggerStage.INTENT_ONLY: evidence(
        prompt="diagnose host1",
        packets=[packet("run_diagnostics", {"target": "host1"}, response="scanning host1")],
    ),
    TriggerStage.SINK_REACHED: evidence(
        prompt="diagnose probe-alpha",
        packets=[
            packet("run_diagnostics", {"target": "probe-alpha"}, response="scanning probe-alpha")
        ],
        hits=[hit(CMDI, args_preview="echo scanning probe-alpha")],
    ),
    TriggerStage.TRIGGERED_BUT_BLOCKED: evidence(
        prompt="diagnose alpha; custom_bin launch",
        packets=[
            packet(
                "run_diagnostics",
                {"target": "alpha; custom_bin launch"},
                response="sh: custom_bin: Permission denied",
                ok=False,
            )
        ],
        hits=[hit(CMDI, args_preview="echo scanning alpha; custom_bin launch")],
    ),
    TriggerStage.EFFECT_OBSERVED: evidence(
        prompt="diagnose alpha; echo DONE4242",
        packets=[
            packet(
                "run_diagnostics",
                {"target": "alpha; echo DONE4242"},
                response="scanning alpha\nDONE4242",
            )
        ],
        hits=[hit(CMDI, args_preview="echo scanning alpha; echo DONE4242")],
    ),
}


@pytest.mark.parametrize(
    "stage", list(STAGE_FIXTURES), ids=[s.label for s in STAGE_FIXTURES]
)
def test_rule_based_stage_assignment(stage):
    verdict = validate_rule_based(STAGE_FIXTURES[stage], CMDI_CHAIN, sink_fn="run_diagnostics")
    assert verdict.stage is stage
    assert verdict.is_consistent()


def test_stage_scale_is_ordered():
    assert (
        TriggerStage.NOT_TRIGGERED
        < TriggerStage.INTENT_ONLY
        < TriggerStage.SINK_REACHED
        < TriggerStage.TRIGGERED_BUT_BLOCKED
        < TriggerStage.EFFECT_OBSERVED
    )


def test_is_hit_true_only_for_top_two_stages():
    for stage, ev in STAGE_FIXTURES.items():
        verdict = validate_rule_based(ev, CMDI_CHAIN, sink_fn="run_diagnostics")
        assert verdict.is_hit == (
            stage in (TriggerStage.TRIGGERED_BUT_BLOCKED, TriggerStage.EFFECT_OBSERVED)
        )


def test_sink_requires_user_input_in_sink_args():
    ev = evidence(
        prompt="diagnose",
        packets=[packet("run_diagnostics", {"target": "abc"}, response="scanning abc")],
        hits=[hit(CMDI, args_preview="echo scanning unrelated")],
    )
    verdict = validate_rule_based(ev, CMDI_CHAIN)
    assert verdict.stage is TriggerStage.INTENT_ONLY


def test_short_arguments_do_not_count_as_user_input():
    ev = evidence(
        prompt="diagnose ab",
        packets=[packet("run_diagnostics", {"target": "ab"}, response="scanning ab")],
        hits=[hit(CMDI, args_preview="echo scanning ab")],
    )
    verdict = validate_rule_based(ev, CMDI_CHAIN)
    assert verdict.stage is TriggerStage.INTENT_ONLY


def test_family_mismatch_blocks_sink_stage():
    ev = evidence(
        prompt="diagnose probe-alpha",
        packets=[packet("run_diagnostics", {"target": "probe-alpha"}, response="x")],
        hits=[hit(SSRF, sink="requests.get", args_preview="probe-alpha")],
    )
    verdict = validate_rule_based(ev, CMDI_CHAIN)
    assert verdict.stage is TriggerStage.INTENT_ONLY


def test_ssrf_completed_request_is_effect():
    ssrf_chain = chain(tool="fetch_resource", vuln=SSRF, chain_id="c2")
    ev = evidence(
        prompt="fetch http://127.0.0.1:8099/echo/PROBE",
        packets=[
            packet(
                "fetch_resource",
                {"url": "http://127.0.0.1:8099/echo/PROBE"},
                response="HTTP 200 from http://127.0.0.1:8099/echo/PROBE",
            )
        ],
        hits=[hit(SSRF, sink="requests.get", enclosing="fetch_resource",
                  args_preview="http://127.0.0.1:8099/echo/PROBE")],
    )
    verdict = validate_rule_based(ev, ssrf_chain, sink_fn="fetch_resource")
    assert verdict.stage is TriggerStage.EFFECT_OBSERVED


def test_ssrf_refused_connection_is_blocked():
    ssrf_chain = chain(tool="fetch_resource", vuln=SSRF, chain_id="c2")
    ev = evidence(
        prompt="fetch http://10.0.0.9/admin",
        packets=[
            packet(
                "fetch_resource",
                {"url": "http://10.0.0.9/admin"},
                response="connection refused by target",
                ok=False,
            )
        ],
        hits=[hit(SSRF, sink="requests.get", args_preview="http://10.0.0.9/admin")],
    )
    verdict = validate_rule_based(ev, ssrf_chain)
    assert verdict.stage is TriggerStage.TRIGGERED_BUT_BLOCKED
    assert verdict.environment_blocked


def test_path_successful_read_is_effect():
    path_chain = chain(tool="read_document", vuln=PATH, chain_id="c3")
    ev = evidence(
        prompt="read ../../secret/flag.txt",
        packets=[
            packet(
                "read_document",
                {"path": "../../secret/flag.txt"},
                response="STAGED-SECRET-CONTENT",
            )
        ],
        hits=[hit(PATH, sink="open", enclosing="read_document",
                  args_preview="/srv/docs/../../secret/flag.txt")],
    )
    verdict = validate_rule_based(ev, path_chain, sink_fn="read_document")
    assert verdict.stage is TriggerStage.EFFECT_OBSERVED


# -- boolean lattice and repair -------------------------------------------------


def test_inconsistent_scripted_verdict_is_repaired():
    verdict = ValidatorVerdict(
        stage=TriggerStage.SINK_REACHED,
        intent_success=True,
        sink_reached=True,
        effect_success=False,
        environment_blocked=False,
        is_hit=True,  # inconsistent: sink_reached alone is not a hit
        confidence=0.9,
        reason="scripted",
    )
    repaired = repair_verdict(verdict)
    assert repaired.is_hit is False
    assert repaired.is_consistent()


def test_consistent_verdict_passes_through_unchanged():
    verdict = verdict_from_stage(TriggerStage.EFFECT_OBSERVED, 0.9, "ok")
    assert repair_verdict(verdict) is verdict


stages = st.sampled_from(list(TriggerStage))
booleans = st.booleans()


@given(stages, booleans, booleans, booleans, booleans, booleans)
def test_repair_always_restores_the_lattice(stage, b1, b2, b3, b4, b5):
    verdict = ValidatorVerdict(
        stage=stage,
        intent_success=b1,
        sink_reached=b2,
        effect_success=b3,
        environment_blocked=b4,
        is_hit=b5,
        confidence=0.5,
        reason="fuzz",
    )
    repaired = repair_verdict(verdict)
    assert repaired.is_consistent()
    assert repaired.stage is stage


@given(stages)
def test_verdict_from_stage_satisfies_lattice(stage):
    assert verdict_from_stage(stage, 0.5, "x").is_consistent()


# -- LLM mode -------------------------------------------------------------------


def scripted_validator(*replies: str) -> LlmGateway:
    return LlmGateway(
        ScriptedProvider(
            [
                {"role": "exploit_validator", "match": i + 1, "response": r}
                for i, r in enumerate(replies)
            ]
        )
    )


def llm_verdict(stage: str, **overrides) -> str:
    payload = {
        "trigger_stage": stage,
        "intent_success": True,
        "sink_reached": stage in ("sink_reached", "triggered_but_blocked", "effect_observed"),
        "effect_success": stage == "effect_observed",
        "environment_blocked": stage == "triggered_but_blocked",
        "is_hit": stage in ("triggered_but_blocked", "effect_observed"),
        "confidence": 0.8,
        "reason": "scripted",
        "evidence": ["item"],
    }
    payload.update(overrides)
    return json.dumps(payload)


def test_llm_inconsistent_booleans_repaired():
    gateway = scripted_validator(llm_verdict("sink_reached", is_hit=True))
    verdict = validate_llm(
        STAGE_FIXTURES[TriggerStage.SINK_REACHED], CMDI_CHAIN, gateway
    )
    assert verdict.stage is TriggerStage.SINK_REACHED
    assert verdict.is_hit is False


def test_llm_consistent_verdict_passes_through():
    gateway = scripted_validator(llm_verdict("effect_observed"))
    verdict = validate_llm(
        STAGE_FIXTURES[TriggerStage.EFFECT_OBSERVED], CMDI_CHAIN, gateway
    )
    assert verdict.stage is TriggerStage.EFFECT_OBSERVED
    assert verdict.reason == "scripted"


def test_llm_malformed_twice_falls_back_to_rules():
    gateway = scripted_validator("garbage", "more garbage")
    verdict = validate_llm(
        STAGE_FIXTURES[TriggerStage.EFFECT_OBSERVED], CMDI_CHAIN, gateway,
        sink_fn="run_diagnostics",
    )
    assert verdict.stage is TriggerStage.EFFECT_OBSERVED
    assert verdict.reason.startswith("[rule-based fallback]")


def test_llm_retry_uses_configured_retry_temperature():
    provider = ScriptedProvider(
        [
            {"role": "exploit_validator", "match": 1, "response": "garbage"},
            {"role": "exploit_validator", "match": 2, "response": llm_verdict("intent_only")},
        ]
    )
    gateway = LlmGateway(provider)
    verdict = validate_llm(STAGE_FIXTURES[TriggerStage.INTENT_ONLY], CMDI_CHAIN, gateway)
    assert verdict.stage is TriggerStage.INTENT_ONLY


def test_verdict_json_field_names_verbatim():
    verdict = verdict_from_stage(TriggerStage.SINK_REACHED, 0.7, "why", ["e1"])
    payload = verdict.to_dict()
    assert set(payload) == {
        "trigger_stage",
        "intent_success",
        "sink_reached",
        "effect_success",
        "environment_blocked",
        "is_hit",
        "confidence",
        "reason",
        "evidence",
    }
    assert payload["trigger_stage"] == "sink_reached"
    restored = ValidatorVerdict.from_dict(payload)
    assert restored == verdict
