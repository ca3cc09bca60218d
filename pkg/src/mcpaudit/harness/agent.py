"""Surrogate agent: interprets a prompt as a user request and autonomously
invokes MCP tools, assembling the round's execution evidence."""
from __future__ import annotations

import json
import logging
import re
from typing import Any

from ..llm.config import Role
from ..llm.gateway import GatewayError, LlmGateway
from .evidence import ExecutionEvidence, ToolSchema
from .oracle import OracleWatcher
from .session import McpSession, call_tool

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 6

AGENT_SYSTEM_PROMPT = """\
You are an operations assistant connected to a set of tools. Interpret the
user's request and complete it by calling tools when needed.

To call a tool, either use the structured tool-call channel, or reply with a
single fenced JSON block of the form:
```json
{"tool": "<name>", "args": {...}}
```
When the task is complete, reply with a short plain-text summary.

Available tools:
"""

_FENCED_JSON = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.S)


def _format_tools(tools: list[ToolSchema]) -> str:
    lines = []
    for tool in tools:
        schema = json.dumps(tool.params_schema, sort_keys=True) if tool.params_schema else "{}"
        lines.append(f"- {tool.name}: {tool.description} (input schema: {schema})")
    return "\n".join(lines) if lines else "(none)"


def _parse_directives(exchange_text: str, tool_calls: list[dict[str, Any]]) -> list[dict[str, Any]]:
    """Structured channel first; fenced-JSON fallback for providers without one."""
    if tool_calls:
        out = []
        for tc in tool_calls:
            name = tc.get("tool") or tc.get("name")
            args = tc.get("args") if "args" in tc else tc.get("arguments")
            if name:
                out.append({"tool": name, "args": args if isinstance(args, dict) else {}})
        return out
    out = []
    for match in _FENCED_JSON.finditer(exchange_text):
        try:
            obj = json.loads(match.group(1))
        except json.JSONDecodeError:
            continue
        name = obj.get("tool") or obj.get("name")
        args = obj.get("args") if "args" in obj else obj.get("arguments")
        if name:
            out.append({"tool": name, "args": args if isinstance(args, dict) else {}})
    return out


def run_agent(
    session: McpSession,
    prompt: str,
    gateway: LlmGateway,
    tools: list[ToolSchema],
    oracle: OracleWatcher | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ExecutionEvidence:
    """One fuzzing round: loop LLM turns, execute tool-call directives, stop
    on a final text reply or the step cap. Oracle hits are the event-channel
    delta for this round only. A gateway failure still yields scoreable
    evidence (empty tool set, diagnostic response)."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if oracle is not None:
        oracle.skip_to_end()  # round isolation: drop events from earlier activity

    evidence = ExecutionEvidence(prompt=prompt, agent_response="")
    system = AGENT_SYSTEM_PROMPT + _format_tools(tools)
    messages: list[dict[str, str]] = [
        {"role": "system", "content": system},
        {"role": "user", "content": prompt},
    ]
    tool_dicts = [t.to_dict() for t in tools]
    known = {t.name for t in tools}

    for _step in range(max_steps):
        try:
            exchange = gateway.complete(Role.SURROGATE_AGENT, messages, tools=tool_dicts)
        except GatewayError as exc:
            evidence.agent_response = f"[agent gateway failure: {exc}]"
            evidence.call_trace.append(f"gateway_error: {exc}")
            break
        directives = _parse_directives(exchange.text, exchange.tool_calls)
        if not directives:
            evidence.agent_response = exchange.text
            evidence.call_trace.append("final_response")
            break
        messages.append({"role": "assistant", "content": exchange.text or "[tool call]"})
        for directive in directives:
            name, args = directive["tool"], directive["args"]
            if name not in known:
                evidence.call_trace.append(f"unknown_tool:{name}")
                messages.append(
                    {"role": "user", "content": f"[tool {name} is not available]"}
                )
                continue
            record = call_tool(session, name, args)
            evidence.request_packets.append(record)
            if record.tool not in evidence.tools_invoked:
                evidence.tools_invoked.append(record.tool)
            status = "ok" if record.ok else "error"
            evidence.call_trace.append(
                f"tool_call:{name}({json.dumps(args, sort_keys=True)}) -> {status}"
            )
            messages.append(
                {
                    "role": "user",
                    "content": f"[tool {name} result] {record.response_text()[:2000]}",
                }
            )
    else:
        evidence.agent_response = evidence.agent_response or "[step cap reached]"
        evidence.call_trace.append("step_cap")

    if oracle is not None:
        evidence.oracle_hits = oracle.poll()
    return evidence
