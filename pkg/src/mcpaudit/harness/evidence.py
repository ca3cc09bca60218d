"""Per-round execution evidence records."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..anchor.types import VulnClass


@dataclass(frozen=True)
class ToolSchema:
    name: str
    description: str = ""
    params_schema: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "params_schema": self.params_schema,
        }


@dataclass
class ToolCallRecord:
    tool: str
    args: Any
    response: Any
    ok: bool
    ts: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": self.tool,
            "args": self.args,
            "response": self.response,
            "ok": self.ok,
            "ts": self.ts,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ToolCallRecord":
        return cls(
            tool=d["tool"], args=d["args"], response=d["response"],
            ok=d["ok"], ts=d.get("ts", 0.0),
        )

    def string_args(self) -> list[str]:
        out: list[str] = []

        def walk(value: Any) -> None:
            if isinstance(value, str):
                out.append(value)
            elif isinstance(value, dict):
                for v in value.values():
                    walk(v)
            elif isinstance(value, (list, tuple)):
                for v in value:
                    walk(v)

        walk(self.args)
        return out

    def response_text(self) -> str:
        if isinstance(self.response, str):
            return self.response

        parts: list[str] = []

        def walk(value: Any) -> None:
            if isinstance(value, str):
                parts.append(value)
            elif isinstance(value, dict):
                for v in value.values():
                    walk(v)
            elif isinstance(value, (list, tuple)):
                for v in value:
                    walk(v)

        walk(self.response)
        return "\n".join(parts)


@dataclass
class OracleHit:
    """One runtime sink activation reported over the event channel."""

    sink: str
    category: VulnClass
    args_preview: str
    ts: float
    enclosing_function: str | None = None
    line: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "sink": self.sink,
            "category": self.category.value,
            "args_preview": self.args_preview,
            "ts": self.ts,
            "enclosing_function": self.enclosing_function,
            "line": self.line,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "OracleHit":
        return cls(
            sink=d["sink"],
            category=VulnClass(d["category"]),
            args_preview=d.get("args_preview", ""),
            ts=d.get("ts", 0.0),
            enclosing_function=d.get("enclosing_function"),
            line=d.get("line"),
        )


@dataclass
class ExecutionEvidence:
    prompt: str
    agent_response: str
    tools_invoked: list[str] = field(default_factory=list)
    request_packets: list[ToolCallRecord] = field(default_factory=list)
    call_trace: list[str] = field(default_factory=list)
    oracle_hits: list[OracleHit] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt": self.prompt,
            "agent_response": self.agent_response,
            "tools_invoked": list(self.tools_invoked),
            "request_packets": [p.to_dict() for p in self.request_packets],
            "call_trace": list(self.call_trace),
            "oracle_hits": [h.to_dict() for h in self.oracle_hits],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExecutionEvidence":
        return cls(
            prompt=d["prompt"],
            agent_response=d["agent_response"],
            tools_invoked=list(d.get("tools_invoked", [])),
            request_packets=[ToolCallRecord.from_dict(p) for p in d.get("request_packets", [])],
            call_trace=list(d.get("call_trace", [])),
            oracle_hits=[OracleHit.from_dict(h) for h in d.get("oracle_hits", [])],
        )
