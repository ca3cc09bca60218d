"""Exploit-stage validation over one round's execution evidence.

The stage scale is ordered; a verdict's booleans are constrained by the
stage and repaired when an LLM reply violates the constraints:

  sink_reached        <=> stage >= SINK_REACHED
  environment_blocked <=> stage == TRIGGERED_BUT_BLOCKED
  effect_success      <=> stage == EFFECT_OBSERVED
  is_hit              <=> stage in {TRIGGERED_BUT_BLOCKED, EFFECT_OBSERVED}
"""
from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any

from ..anchor.types import CallChain, VulnClass
from ..harness.evidence import ExecutionEvidence, OracleHit, ToolCallRecord
from ..llm.config import Role
from ..llm.gateway import GatewayError, LlmGateway
from ..llm.templates import render_template
from .scoring import MIN_MATCH_LEN, parse_strict_json, target_invoked, trace_shows_movement

logger = logging.getLogger(__name__)


class TriggerStage(enum.IntEnum):
    NOT_TRIGGERED = 0
    INTENT_ONLY = 1
    SINK_REACHED = 2
    TRIGGERED_BUT_BLOCKED = 3
    EFFECT_OBSERVED = 4

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "TriggerStage":
        return cls[label.strip().upper()]


# Explicit blocker markers in response or error text.
BLOCKER_MARKERS = (
    "permission denied",
    "operation not permitted",
    "not found",
    "no such file",
    "missing binary",
    "command not found",
    "connection refused",
    "timed out",
    "timeout",
    "sandbox",
    "eacces",
    "enoent",
    "econnrefused",
)

_CMD_SEPARATORS = re.compile(r";|&&|\|\||\||\$\(|`")
_STOPWORDS = {"echo", "cat", "touch", "curl", "wget", "bash", "sh", "then", "true"}


@dataclass
class ValidatorVerdict:
    stage: TriggerStage
    intent_success: bool
    sink_reached: bool
    effect_success: bool
    environment_blocked: bool
    is_hit: bool
    confidence: float
    reason: str
    evidence: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trigger_stage": self.stage.label,
            "intent_success": self.intent_success,
            "sink_reached": self.sink_reached,
            "effect_success": self.effect_success,
            "environment_blocked": self.environment_blocked,
            "is_hit": self.is_hit,
            "confidence": self.confidence,
            "reason": self.reason,
            "evidence": list(self.evidence),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ValidatorVerdict":
        return cls(
            stage=TriggerStage.from_label(d["trigger_stage"]),
            intent_success=bool(d.get("intent_success", False)),
            sink_reached=bool(d.get("sink_reached", False)),
            effect_success=bool(d.get("effect_success", False)),
            environment_blocked=bool(d.get("environment_blocked", False)),
            is_hit=bool(d.get("is_hit", False)),
            confidence=float(d.get("confidence", 0.0)),
            reason=d.get("reason", ""),
            evidence=list(d.get("evidence", [])),
        )

    def is_consistent(self) -> bool:
        return (
            self.sink_reached == (self.stage >= TriggerStage.SINK_REACHED)
            and self.environment_blocked == (self.stage == TriggerStage.TRIGGERED_BUT_BLOCKED)
            and self.effect_success == (self.stage == TriggerStage.EFFECT_OBSERVED)
            and self.is_hit
            == (self.stage in (TriggerStage.TRIGGERED_BUT_BLOCKED, TriggerStage.EFFECT_OBSERVED))
        )


def verdict_from_stage(
    stage: TriggerStage,
    confidence: float,
    reason: str,
    evidence: list[str] | None = None,
) -> ValidatorVerdict:
    return ValidatorVerdict(
        stage=stage,
        intent_success=stage >= TriggerStage.INTENT_ONLY,
        sink_reached=stage >= TriggerStage.SINK_REACHED,
        effect_success=stage == TriggerStage.EFFECT_OBSERVED,
        environment_blocked=stage == TriggerStage.TRIGGERED_BUT_BLOCKED,
        is_hit=stage in (TriggerStage.TRIGGERED_BUT_BLOCKED, TriggerStage.EFFECT_OBSERVED),
        confidence=min(1.0, max(0.0, confidence)),
        reason=reason,
        evidence=evidence or [],
    )


def repair_verdict(verdict: ValidatorVerdict) -> ValidatorVerdict:
    """Recompute all booleans from the stage when any constraint is violated."""
    if verdict.is_consistent():
        return verdict
    logger.warning(
        "verdict booleans inconsistent with stage %s, repaired", verdict.stage.label
    )
    return verdict_from_stage(
        verdict.stage, verdict.confidence, verdict.reason, verdict.evidence
    )


# -- rule-based stage checklists ----------------------------------------------


def _input_reaching_hits(
    packets: list[ToolCallRecord], hits: list[OracleHit], vuln_class: VulnClass
) -> list[tuple[ToolCallRecord, OracleHit]]:
    """(packet, hit) pairs where a request string argument of length >=
    MIN_MATCH_LEN appears in a family-matching hit's sink arguments."""
    pairs = []
    for hit in hits:
        if hit.category != vuln_class:
            continue
        for packet in packets:
            for arg in packet.string_args():
                if len(arg) >= MIN_MATCH_LEN and arg in hit.args_preview:
                    pairs.append((packet, hit))
                    break
    return pairs


def _blocker_present(evidence: ExecutionEvidence) -> bool:
    texts = [evidence.agent_response.casefold()]
    texts.extend(p.response_text().casefold() for p in evidence.request_packets)
    return any(marker in text for marker in BLOCKER_MARKERS for text in texts)


def _payload_tokens(arg: str) -> list[str]:
    """Tokens whose presence in a response indicates the injected command
    ran: for each segment after a shell separator or substitution, the
    alphanumeric tokens (>= MIN_MATCH_LEN) excluding the segment's command
    word itself. Error text like "sh: foo: not found" echoes the command
    word, so only the arguments count as output evidence."""
    parts = _CMD_SEPARATORS.split(arg)
    tokens: list[str] = []
    for segment in parts[1:]:
        words = re.findall(r"[A-Za-z0-9_./-]+", segment)
        for word in words[1:]:
            for token in re.findall(r"[A-Za-z0-9_.-]{%d,}" % MIN_MATCH_LEN, word):
                if token.lower() not in _STOPWORDS:
                    tokens.append(token)
    return tokens


def _effect_observed(
    evidence: ExecutionEvidence,
    reached: list[tuple[ToolCallRecord, OracleHit]],
    vuln_class: VulnClass,
) -> bool:
    """Concrete side-effect evidence, by family:

    command_injection: output of the injected command segment shows up in a
    tool response. ssrf / path_injection: the sink-reaching call completed
    (ok response), i.e. the outbound request or file operation succeeded.
    """
    if vuln_class is VulnClass.COMMAND_INJECTION:
        responses = [p.response_text() for p in evidence.request_packets]
        for packet, _hit in reached:
            for arg in packet.string_args():
                for token in _payload_tokens(arg):
                    if any(token in resp for resp in responses):
                        return True
        return False
    return any(packet.ok for packet, _hit in reached)


def validate_rule_based(
    evidence: ExecutionEvidence,
    chain: CallChain,
    sink_fn: str | None = None,
) -> ValidatorVerdict:
    """Deterministic stage assignment: the highest stage whose checklist is
    fully met, with booleans derived from the stage."""
    reached = _input_reaching_hits(
        evidence.request_packets, evidence.oracle_hits, chain.vuln_class
    )
    collected: list[str] = [f"tools_invoked={evidence.tools_invoked}"]
    if evidence.oracle_hits:
        collected.append(f"oracle_hits={len(evidence.oracle_hits)}")

    if reached:
        collected.append(
            f"user input reached sink {reached[0][1].sink} "
            f"({reached[0][1].args_preview[:80]!r})"
        )
        if _effect_observed(evidence, reached, chain.vuln_class):
            return verdict_from_stage(
                TriggerStage.EFFECT_OBSERVED, 0.9,
                "side effect materialized with user-controlled input at the sink",
                collected,
            )
        if _blocker_present(evidence):
            return verdict_from_stage(
                TriggerStage.TRIGGERED_BUT_BLOCKED, 0.8,
                "sink reached with user input; environmental blocker prevented the effect",
                collected,
            )
        return verdict_from_stage(
            TriggerStage.SINK_REACHED, 0.7,
            "family-matching oracle hit carries user-controlled input",
            collected,
        )

    if target_invoked(evidence, chain.tool_candidate) or trace_shows_movement(evidence, chain):
        return verdict_from_stage(
            TriggerStage.INTENT_ONLY, 0.6,
            "relevant tool activity without sink evidence",
            collected,
        )
    return verdict_from_stage(
        TriggerStage.NOT_TRIGGERED, 0.9, "no relevant activity", collected
    )


# -- LLM validation ------------------------------------------------------------


def _validator_bindings(
    evidence: ExecutionEvidence, chain: CallChain, sink_fn: str | None
) -> dict[str, str]:
    failed = [p for p in evidence.request_packets if not p.ok]
    return {
        "TARGET_CALL_CHAIN": chain.describe(),
        "VULNERABILITY_FAMILY": chain.vuln_class.value,
        "TARGET_FUNCTION_HINT": sink_fn or chain.tool_candidate,
        "AGENT_PROMPT": json.dumps(evidence.prompt)[1:-1],
        "CALL_TRACE": json.dumps(" | ".join(evidence.call_trace))[1:-1],
        "TOOLS_INVOKED": json.dumps(evidence.tools_invoked),
        "ORACLE_HITS": json.dumps(
            [
                {"sink": h.sink, "category": h.category.value, "line": h.line}
                for h in evidence.oracle_hits
            ]
        ),
        "RESPONSE_SUCCESS": json.dumps(all(p.ok for p in evidence.request_packets)),
        "RESPONSE_ERROR": (failed[0].response_text()[:200] if failed else ""),
    }


def validate_llm(
    evidence: ExecutionEvidence,
    chain: CallChain,
    gateway: LlmGateway,
    sink_fn: str | None = None,
) -> ValidatorVerdict:
    """LLM verdict with boolean-consistency repair; retries once at the
    configured retry temperature, then falls back to the rule-based twin."""
    messages = render_template(
        "exploit_validation", _validator_bindings(evidence, chain, sink_fn)
    )
    config = gateway.config_for(Role.EXPLOIT_VALIDATOR)
    temperatures = [config.temperature]
    temperatures.append(
        config.retry_temperature if config.retry_temperature is not None else config.temperature
    )
    for temperature in temperatures:
        try:
            exchange = gateway.complete(
                Role.EXPLOIT_VALIDATOR, messages, temperature_override=temperature
            )
        except GatewayError as exc:
            logger.warning("validator exchange failed: %s", exc)
            break
        parsed = parse_strict_json(exchange.text)
        if parsed is not None and "trigger_stage" in parsed:
            try:
                return repair_verdict(ValidatorVerdict.from_dict(parsed))
            except (KeyError, ValueError):
                pass
        logger.warning("validator reply was not strict JSON, retrying")
    fallback = validate_rule_based(evidence, chain, sink_fn=sink_fn)
    fallback.reason = f"[rule-based fallback] {fallback.reason}"
    return fallback
