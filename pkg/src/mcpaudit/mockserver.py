"""Loopback mock MCP server for self-contained testing.

Profiles advertise different tool surfaces. Vulnerable profiles simulate
their sink: on every call they append a conforming oracle event to
$VIPER_ORACLE_OUT (when set) and echo the effect a real sink would have
produced, so full-stage validation works without runtime hooks. The benign
profile never writes oracle events. The silent profile accepts the
connection and never answers (handshake-timeout fixture).

Run as `mcpaudit mock-server --profile cmdi` or
`python -m mcpaudit.mockserver --profile cmdi`.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from typing import Any, Callable

PROFILES = ("benign", "cmdi", "ssrf", "path", "paginated", "silent")

PROTOCOL_VERSION = "2024-11-05"

_SHELL_SPLIT = re.compile(r";|&&|\|\||\|")
_SUBSTITUTION = re.compile(r"\$\(([^)]*)\)|`([^`]*)`")


def _emit_oracle_event(
    sink: str, category: str, args_preview: str, enclosing_function: str, line: int
) -> None:
    path = os.environ.get("VIPER_ORACLE_OUT")
    if not path:
        return
    event = {
        "ts": time.time(),
        "pid": os.getpid(),
        "sink": sink,
        "category": category,
        "args_preview": args_preview[:2048],
        "enclosing_function": enclosing_function,
        "line": line,
    }
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(event) + "\n")
        fh.flush()


def _run_segment(segment: str) -> str | None:
    segment = segment.strip()
    if not segment:
        return None
    if segment.startswith("echo "):
        return segment[5:].strip().strip("'\"")
    return f"{segment}: simulated"


def _simulate_shell(cmd: str) -> str:
    """Fake `sh -c` trace: echo segments produce their text, anything else a
    'simulated' marker line, including command substitutions."""
    outputs: list[str] = []
    for segment in _SHELL_SPLIT.split(cmd):
        out = _run_segment(_SUBSTITUTION.sub("", segment))
        if out is not None:
            outputs.append(out)
        for sub in _SUBSTITUTION.finditer(segment):
            inner = sub.group(1) or sub.group(2) or ""
            sub_out = _run_segment(inner)
            if sub_out is not None:
                outputs.append(sub_out)
    return "\n".join(outputs)


# -- tool handlers per profile -------------------------------------------------


def _cmdi_run_diagnostics(args: dict[str, Any]) -> str:
    target = str(args.get("target", ""))
    cmd = "echo scanning " + target
    _emit_oracle_event(
        sink="subprocess.run",
        category="command_injection",
        args_preview=cmd,
        enclosing_function="run_diagnostics",
        line=7,
    )
    return _simulate_shell(cmd)


def _ssrf_fetch_resource(args: dict[str, Any]) -> str:
    url = str(args.get("url", ""))
    _emit_oracle_event(
        sink="requests.get",
        category="ssrf",
        args_preview=url,
        enclosing_function="fetch_resource",
        line=11,
    )
    return f"HTTP 200 from {url}\nfetched: OK"


def _path_read_document(args: dict[str, Any]) -> str:
    rel = str(args.get("path", ""))
    resolved = f"/srv/docs/{rel}"
    _emit_oracle_event(
        sink="open",
        category="path_injection",
        args_preview=resolved,
        enclosing_function="read_document",
        line=15,
    )
    if "../" in rel:
        return f"ROOT-FILE-CONTENT({rel})"
    return f"DOC-CONTENT({rel})"


def _benign_echo_text(args: dict[str, Any]) -> str:
    return f"echo: {args.get('text', '')}"


def _benign_lookup_status(args: dict[str, Any]) -> str:
    service = str(args.get("service", ""))
    return f"status of {service}: ok"


def _trivial(name: str) -> Callable[[dict[str, Any]], str]:
    def handler(_args: dict[str, Any]) -> str:
        return f"{name}: ok"

    return handler


def _string_tool(name: str, description: str, param: str) -> dict[str, Any]:
    return {
        "name": name,
        "description": description,
        "inputSchema": {
            "type": "object",
            "properties": {param: {"type": "string"}},
            "required": [param],
        },
    }


def _profile_tools(profile: str) -> tuple[list[dict[str, Any]], dict[str, Callable]]:
    if profile == "benign":
        return (
            [
                _string_tool("echo_text", "Echo a text snippet back.", "text"),
                _string_tool("lookup_status", "Report the status of a service.", "service"),
            ],
            {"echo_text": _benign_echo_text, "lookup_status": _benign_lookup_status},
        )
    if profile == "cmdi":
        return (
            [
                _string_tool(
                    "run_diagnostics",
                    "Run a connectivity diagnostic against a host target.",
                    "target",
                )
            ],
            {"run_diagnostics": _cmdi_run_diagnostics},
        )
    if profile == "ssrf":
        return (
            [_string_tool("fetch_resource", "Fetch a resource by URL.", "url")],
            {"fetch_resource": _ssrf_fetch_resource},
        )
    if profile == "path":
        return (
            [_string_tool("read_document", "Read a document from the docs store.", "path")],
            {"read_document": _path_read_document},
        )
    if profile == "paginated":
        tools = [
            _string_tool(f"tool_{name}", f"Trivial tool {name}.", "value")
            for name in ("alpha", "beta", "gamma", "delta")
        ]
        handlers = {t["name"]: _trivial(t["name"]) for t in tools}
        return tools, handlers
    raise ValueError(f"unknown profile {profile!r}")


# -- protocol loop --------------------------------------------------------------


def _reply(msg_id: Any, result: dict[str, Any]) -> None:
    sys.stdout.write(json.dumps({"jsonrpc": "2.0", "id": msg_id, "result": result}) + "\n")
    sys.stdout.flush()


def _reply_error(msg_id: Any, code: int, message: str) -> None:
    sys.stdout.write(
        json.dumps({"jsonrpc": "2.0", "id": msg_id, "error": {"code": code, "message": message}})
        + "\n"
    )
    sys.stdout.flush()


def serve(profile: str) -> int:
    if profile == "silent":
        for _line in sys.stdin:
            pass
        return 0
    tools, handlers = _profile_tools(profile)
    page_size = 2 if profile == "paginated" else len(tools) or 1

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            continue
        method = message.get("method")
        msg_id = message.get("id")
        if method == "initialize":
            _reply(
                msg_id,
                {
                    "protocolVersion": PROTOCOL_VERSION,
                    "capabilities": {"tools": {}},
                    "serverInfo": {"name": f"mock-{profile}", "version": "0.1.0"},
                },
            )
        elif method == "notifications/initialized":
            continue
        elif method == "tools/list":
            cursor = (message.get("params") or {}).get("cursor")
            start = int(cursor) if cursor else 0
            page = tools[start : start + page_size]
            result: dict[str, Any] = {"tools": page}
            if start + page_size < len(tools):
                result["nextCursor"] = str(start + page_size)
            _reply(msg_id, result)
        elif method == "tools/call":
            params = message.get("params") or {}
            name = params.get("name")
            arguments = params.get("arguments") or {}
            handler = handlers.get(name)
            if handler is None:
                _reply_error(msg_id, -32602, f"unknown tool: {name}")
                continue
            schema = next(t for t in tools if t["name"] == name)
            missing = [
                key
                for key in schema["inputSchema"].get("required", [])
                if key not in arguments
            ]
            if missing:
                _reply_error(
                    msg_id, -32602, f"invalid arguments for {name}: missing {missing[0]!r}"
                )
                continue
            text = handler(arguments)
            _reply(msg_id, {"content": [{"type": "text", "text": text}], "isError": False})
        elif msg_id is not None:
            _reply_error(msg_id, -32601, f"method not found: {method}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="loopback mock MCP server")
    parser.add_argument("--profile", required=True, choices=PROFILES)
    args = parser.parse_args(argv)
    return serve(args.profile)


if __name__ == "__main__":
    sys.exit(main())
