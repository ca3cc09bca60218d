"""Dual mutation operators and the mutator scheduling decision.

The structure mutator rewrites the prompt's framing to correct tool-path
drift; the parameter mutator keeps the task and tool but refines the
user-controlled value. The scheduler picks between them from the last
round's scores, via the LLM decision tokens or a deterministic fallback.
"""
from __future__ import annotations

import json
import logging
import re

from ..harness.evidence import ExecutionEvidence
from ..llm.config import Role
from ..llm.gateway import GatewayError, LlmGateway
from ..llm.templates import render_template
from .chromosome import Chromosome
from .context import TaintContext
from .styles import DEFAULT_STYLES, StyleTemplate
from ..feedback.scoring import target_invoked

logger = logging.getLogger(__name__)

STRUCTURE = "structure"
PARAMETER = "parameter"

STRUCTURE_TOKEN = "<STRUCTURE MUTATOR>"
PARAMETER_TOKEN = "<PARAMETER MUTATOR>"

# Threshold below which a score counts as "low" in the fallback rule,
# mirroring the scheduling prompt's steps.
LOW_SCORE = 7.0

_NEWPROMPT = re.compile(r"<NEWPROMPT>\s*(.*?)\s*</NEWPROMPT>", re.S)
_REASON = re.compile(r"<PROMPTREASON>\s*(.*?)\s*</PROMPTREASON>", re.S)


def fallback_mutator_rule(parent: Chromosome, evidence: ExecutionEvidence | None, target_tool: str) -> str:
    """Deterministic twin of the scheduling prompt:
    structure when S_str is low and the target tool was not invoked;
    parameter when S_str is high; structure when both scores are weak."""
    scores = parent.scores
    if scores is None:
        return STRUCTURE
    if scores.s_str >= LOW_SCORE:
        # On the right tool path; deepen penetration unless the evidence
        # contradicts the score and shows the target was never invoked.
        if evidence is not None and not target_invoked(evidence, target_tool):
            return STRUCTURE
        return PARAMETER
    return STRUCTURE


def schedule_mutator(
    parent: Chromosome,
    gateway: LlmGateway,
    evidence: ExecutionEvidence | None,
    target_tool: str,
) -> str:
    """LLM decision parsed from the exact mutator tokens; unparseable replies
    fall back to the rule above."""
    if parent.scores is None:
        raise ValueError(f"parent {parent.id} has no scores")
    packets = (
        [{"tool": p.tool, "args": p.args, "ok": p.ok} for p in evidence.request_packets]
        if evidence
        else []
    )
    bindings = {
        "STRUCTURE_SCORE": f"{parent.scores.s_str:g}",
        "PARAMETER_SCORE": f"{parent.scores.s_par:g}",
        "STRUCTURE_REASON": parent.scores.structure_reason,
        "PARAMETER_REASON": parent.scores.parameter_reason,
        "AGENT_RESPONSE_SUMMARY": (evidence.agent_response[:500] if evidence else ""),
        "REQUEST_PACKETS": json.dumps(packets),
        "CALL_STACK": json.dumps(evidence.call_trace if evidence else []),
    }
    messages = render_template("mutation_scheduling", bindings)
    try:
        exchange = gateway.complete(Role.MUTATION_SCHEDULER, messages)
    except GatewayError as exc:
        logger.warning("scheduler exchange failed (%s), using fallback rule", exc)
        return fallback_mutator_rule(parent, evidence, target_tool)
    has_structure = STRUCTURE_TOKEN in exchange.text
    has_parameter = PARAMETER_TOKEN in exchange.text
    if has_structure != has_parameter:
        return STRUCTURE if has_structure else PARAMETER
    logger.warning("scheduler reply lacked a single decision token, using fallback rule")
    return fallback_mutator_rule(parent, evidence, target_tool)


def _style_block(style: StyleTemplate) -> str:
    return f"id={style.id}; label={style.label}; guidance={style.guidance}"


def _mutate(
    parent: Chromosome,
    context: TaintContext,
    evidence: ExecutionEvidence | None,
    gateway: LlmGateway,
    styles: tuple[StyleTemplate, ...],
    mutator: str,
    round_index: int,
) -> list[Chromosome]:
    candidates: list[Chromosome] = []
    call_trace = json.dumps(evidence.call_trace if evidence else [])
    packets = json.dumps(
        [{"tool": p.tool, "args": p.args, "ok": p.ok} for p in (evidence.request_packets if evidence else [])]
    )
    feedback = json.dumps(
        [p.response_text()[:500] for p in (evidence.request_packets if evidence else [])]
    )
    scores = parent.scores
    assert scores is not None

    for style in styles:
        if mutator == STRUCTURE:
            bindings = {
                "TARGET_CALL_CHAIN": context.chain.describe(),
                "CALL_TRACE": call_trace,
                "ORIGINAL_PROMPT": parent.prompt,
                "STRUCTURE_SCORE_AND_REASON": f"{scores.s_str:g} / {scores.structure_reason}",
                "PARAMETER_SCORE_AND_REASON": f"{scores.s_par:g} / {scores.parameter_reason}",
                "STYLE_TEMPLATE": _style_block(style),
            }
            family = "structure_mutation"
            role = Role.STRUCTURE_MUTATOR
        else:
            bindings = {
                "TARGET_CALL_CHAIN": context.chain.describe(),
                "TARGET_FUNCTION_HINT": context.sink_fn,
                "CALL_TRACE": call_trace,
                "REQUEST_PACKETS": packets,
                "TOOL_FEEDBACK": feedback,
                "ORIGINAL_PROMPT": parent.prompt,
                "STRUCTURE_SCORE": f"{scores.s_str:g}",
                "PARAMETER_SCORE": f"{scores.s_par:g}",
                "STYLE_TEMPLATE": _style_block(style),
            }
            family = "parameter_mutation"
            role = Role.PARAMETER_MUTATOR
        messages = render_template(family, bindings)

        prompt: str | None = None
        for _attempt in range(2):
            try:
                exchange = gateway.complete(role, messages)
            except GatewayError as exc:
                logger.warning("%s mutation exchange failed: %s", mutator, exc)
                break
            match = _NEWPROMPT.search(exchange.text)
            if match and match.group(1).strip():
                extracted = match.group(1).strip()
                if mutator == PARAMETER and not _preserves_tool_framing(
                    parent.prompt, extracted, context.chain.tool_candidate
                ):
                    logger.warning(
                        "parameter mutation dropped the target tool token, retrying"
                    )
                    prompt = None
                    continue
                prompt = extracted
                reason_match = _REASON.search(exchange.text)
                if reason_match:
                    logger.debug("mutation reason: %s", reason_match.group(1).strip()[:200])
                break
            logger.warning("mutation reply missing <NEWPROMPT> markers, retrying once")
        if prompt is None:
            logger.warning(
                "dropping style %s for round %d (malformed mutator output)",
                style.id, round_index,
            )
            continue

        candidates.append(
            Chromosome(
                id=f"{context.chain.chain_id}/r{round_index}/{style.id}",
                prompt=prompt,
                style=style.id,
                chain_id=parent.chain_id,
                round=round_index,
                parent_id=parent.id,
                mutator_used=mutator,
            )
        )
    return candidates


def _preserves_tool_framing(parent_prompt: str, child_prompt: str, tool: str) -> bool:
    """Parameter mutations must keep the parent's tool framing: when the
    parent names the target tool, the child must still contain the token."""
    token = tool.casefold()
    if token not in parent_prompt.casefold():
        return True
    return token in child_prompt.casefold()


def structure_mutate(
    parent: Chromosome,
    context: TaintContext,
    evidence: ExecutionEvidence | None,
    gateway: LlmGateway,
    round_index: int,
    styles: tuple[StyleTemplate, ...] = DEFAULT_STYLES,
) -> list[Chromosome]:
    return _mutate(parent, context, evidence, gateway, styles, STRUCTURE, round_index)


def parameter_mutate(
    parent: Chromosome,
    context: TaintContext,
    evidence: ExecutionEvidence | None,
    gateway: LlmGateway,
    round_index: int,
    styles: tuple[StyleTemplate, ...] = DEFAULT_STYLES,
) -> list[Chromosome]:
    return _mutate(parent, context, evidence, gateway, styles, PARAMETER, round_index)
