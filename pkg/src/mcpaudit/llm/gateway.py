"""Uniform provider abstraction for the LLM roles.

Two providers: a deterministic scripted provider for tests and replay, and a
generic chat-completion HTTP provider. The scripted provider is
exhaustive-or-fail: an exchange with no matching script entry is an error,
never silent improvisation.
"""
from __future__ import annotations

import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .config import Role, RoleConfig, default_role_configs

logger = logging.getLogger(__name__)


class GatewayError(RuntimeError):
    pass


class ScriptExhaustedError(GatewayError):
    """No script entry matched the requested exchange."""


@dataclass
class ChatExchange:
    messages: list[dict[str, str]]
    text: str
    tool_calls: list[dict[str, Any]] = field(default_factory=list)
    input_tokens: int = 0
    output_tokens: int = 0


class Provider(Protocol):
    def complete(
        self,
        config: RoleConfig,
        messages: list[dict[str, str]],
        tools: list[dict[str, Any]] | None,
        temperature: float,
    ) -> ChatExchange: ...


def _approx_tokens(text: str) -> int:
    return len(text.split())


@dataclass
class _ScriptEntry:
    role: Role
    match: int | str  # ordinal (1-based per role) or regex pattern
    response: str
    tool_calls: list[dict[str, Any]] = field(default_factory=list)
    once: bool = False
    used: bool = False


class ScriptedProvider:
    """Replays canned outputs matched by (role, ordinal) or (role, pattern).

    Pattern entries are regex-searched against the content of the last
    message; ordinal entries fire on the role's nth call. Patterns win over
    ordinals so tool feedback can be scripted independently of call counts.
    """

    def __init__(self, entries: list[dict[str, Any]]):
        self.entries = [
            _ScriptEntry(
                role=Role(e["role"]),
                match=e["match"],
                response=e.get("response", ""),
                tool_calls=list(e.get("tool_calls", [])),
                once=bool(e.get("once", False)),
            )
            for e in entries
        ]
        self._counts: dict[Role, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(
        self,
        config: RoleConfig,
        messages: list[dict[str, str]],
        tools: list[dict[str, Any]] | None,
        temperature: float,
    ) -> ChatExchange:
        with self._lock:
            ordinal = self._counts.get(config.role, 0) + 1
            self._counts[config.role] = ordinal
            last = messages[-1]["content"] if messages else ""
            entry = self._find(config.role, ordinal, last)
            if entry is None:
                raise ScriptExhaustedError(
                    f"no script entry for role={config.role.value} call #{ordinal}; "
                    f"last message starts with {last[:80]!r}"
                )
            entry.used = True
        text = entry.response
        return ChatExchange(
            messages=messages,
            text=text,
            tool_calls=[dict(tc) for tc in entry.tool_calls],
            input_tokens=sum(_approx_tokens(m["content"]) for m in messages),
            output_tokens=_approx_tokens(text),
        )

    def _find(self, role: Role, ordinal: int, last: str) -> _ScriptEntry | None:
        for entry in self.entries:
            if entry.role != role or not isinstance(entry.match, str):
                continue
            if entry.once and entry.used:
                continue
            if re.search(entry.match, last, re.S):
                return entry
        for entry in self.entries:
            if entry.role == role and entry.match == ordinal:
                return entry
        return None


class HttpProvider:
    """Generic chat-completions endpoint (OpenAI-compatible shape)."""

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        timeout: float = 60.0,
        max_retries: int = 2,
        backoff: float = 0.5,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.retry_count = 0

    def complete(
        self,
        config: RoleConfig,
        messages: list[dict[str, str]],
        tools: list[dict[str, Any]] | None,
        temperature: float,
    ) -> ChatExchange:
        import requests

        payload: dict[str, Any] = {
            "model": config.model_id,
            "messages": messages,
            "temperature": temperature,
            "max_tokens": config.max_output_tokens,
        }
        if tools:
            payload["tools"] = [
                {
                    "type": "function",
                    "function": {
                        "name": t["name"],
                        "description": t.get("description", ""),
                        "parameters": t.get("params_schema") or t.get("parameters") or {},
                    },
                }
                for t in tools
            ]
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
                if resp.status_code >= 500:
                    raise GatewayError(f"server error {resp.status_code}")
                if resp.status_code >= 400:
                    raise GatewayError(f"client error {resp.status_code}: {resp.text[:200]}")
                return self._parse(messages, resp.json())
            except (GatewayError, OSError, ValueError) as exc:
                if isinstance(exc, GatewayError) and "client error" in str(exc):
                    raise
                last_error = exc
                if attempt < self.max_retries:
                    self.retry_count += 1
                    time.sleep(self.backoff * (2**attempt))
        raise GatewayError(f"exchange failed after {self.max_retries} retries: {last_error}")

    def _parse(self, messages: list[dict[str, str]], body: dict[str, Any]) -> ChatExchange:
        choice = (body.get("choices") or [{}])[0]
        message = choice.get("message") or {}
        tool_calls = []
        for tc in message.get("tool_calls") or []:
            fn = tc.get("function") or {}
            try:
                args = json.loads(fn.get("arguments") or "{}")
            except json.JSONDecodeError:
                args = {}
            tool_calls.append({"tool": fn.get("name", ""), "args": args})
        usage = body.get("usage") or {}
        text = message.get("content") or ""
        return ChatExchange(
            messages=messages,
            text=text,
            tool_calls=tool_calls,
            input_tokens=usage.get("prompt_tokens", sum(_approx_tokens(m["content"]) for m in messages)),
            output_tokens=usage.get("completion_tokens", _approx_tokens(text)),
        )


@dataclass
class TokenCounter:
    input_tokens: int = 0
    output_tokens: int = 0
    exchanges: int = 0


class LlmGateway:
    """Routes role exchanges to the configured provider and keeps per-role
    token counters (atomically updated; providers may be shared across
    workers)."""

    def __init__(
        self,
        provider: Provider,
        role_configs: dict[Role, RoleConfig] | None = None,
    ):
        self.provider = provider
        self.role_configs = role_configs or default_role_configs()
        self.counters: dict[Role, TokenCounter] = {}
        self._lock = threading.Lock()

    def config_for(self, role: Role) -> RoleConfig:
        try:
            return self.role_configs[role]
        except KeyError:
            raise GatewayError(f"no configuration for role {role!r}") from None

    def complete(
        self,
        role: Role,
        messages: list[dict[str, str]],
        tools: list[dict[str, Any]] | None = None,
        temperature_override: float | None = None,
    ) -> ChatExchange:
        config = self.config_for(role)
        temperature = (
            temperature_override if temperature_override is not None else config.temperature
        )
        exchange = self.provider.complete(config, messages, tools, temperature)
        with self._lock:
            counter = self.counters.setdefault(role, TokenCounter())
            counter.input_tokens += exchange.input_tokens
            counter.output_tokens += exchange.output_tokens
            counter.exchanges += 1
        return exchange

    def token_usage(self) -> dict[str, dict[str, int]]:
        with self._lock:
            return {
                role.value: {
                    "input": counter.input_tokens,
                    "output": counter.output_tokens,
                    "exchanges": counter.exchanges,
                }
                for role, counter in sorted(self.counters.items(), key=lambda kv: kv[0].value)
            }
