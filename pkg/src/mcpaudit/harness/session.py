"""Stdio JSON-RPC 2.0 session with an MCP server.

Framing is newline-delimited: one JSON-RPC message per line. The handshake
advertises our protocol version and accepts whatever version the server
echoes. The child's lifetime is bound to the session object.
"""
from __future__ import annotations

import json
import logging
import os
import queue
import subprocess
import threading
import time
from collections import deque
from pathlib import Path
from typing import Any

from .evidence import ToolCallRecord, ToolSchema
from .oracle import MANIFEST_ENV, ORACLE_OUT_ENV

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = "2024-11-05"
DEFAULT_HANDSHAKE_TIMEOUT = 15.0
DEFAULT_CALL_TIMEOUT = 30.0


class SessionError(RuntimeError):
    """Connection-level failure; carries captured child stderr when present."""

    def __init__(self, message: str, stderr: str = ""):
        if stderr:
            message = f"{message}\nserver stderr:\n{stderr.rstrip()}"
        super().__init__(message)
        self.stderr = stderr


class McpSession:
    def __init__(
        self,
        process: subprocess.Popen,
        server_info: dict[str, Any],
        call_timeout: float = DEFAULT_CALL_TIMEOUT,
    ):
        self.process = process
        self.server_info = server_info
        self.call_timeout = call_timeout
        self.alive = True
        self.tool_names: set[str] = set()
        self._msg_id = 0
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._stderr: deque[str] = deque(maxlen=200)
        self._start_readers()

    # -- lifecycle -------------------------------------------------------

    def _start_readers(self) -> None:
        def read_stdout() -> None:
            assert self.process.stdout is not None
            for line in self.process.stdout:
                self._lines.put(line)
            self._lines.put(None)

        def read_stderr() -> None:
            assert self.process.stderr is not None
            for line in self.process.stderr:
                self._stderr.append(line)

        threading.Thread(target=read_stdout, daemon=True).start()
        threading.Thread(target=read_stderr, daemon=True).start()

    @property
    def server_name(self) -> str:
        return self.server_info.get("name", "")

    def stderr_tail(self) -> str:
        return "".join(self._stderr)

    def close(self) -> None:
        self.alive = False
        proc = self.process
        if proc.poll() is None:
            try:
                proc.terminate()
                proc.wait(timeout=5)
            except (ProcessLookupError, subprocess.TimeoutExpired):
                try:
                    proc.kill()
                except ProcessLookupError:
                    pass
        for stream in (proc.stdin, proc.stdout, proc.stderr):
            if stream:
                try:
                    stream.close()
                except OSError:
                    pass

    def __enter__(self) -> "McpSession":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- wire ------------------------------------------------------------

    def _write(self, message: dict[str, Any]) -> None:
        if self.process.poll() is not None:
            self.alive = False
        if not self.alive:
            raise SessionError("session is dead", self.stderr_tail())
        assert self.process.stdin is not None
        try:
            self.process.stdin.write(json.dumps(message) + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.alive = False
            raise SessionError(f"write failed: {exc}", self.stderr_tail()) from exc

    def _read_result(self, msg_id: int, timeout: float) -> dict[str, Any]:
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.alive = False
                raise SessionError(
                    f"timed out after {timeout:.0f}s waiting for response {msg_id}",
                    self.stderr_tail(),
                )
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                continue
            if line is None:
                self.alive = False
                raise SessionError("server closed stdout", self.stderr_tail())
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError:
                logger.warning("ignoring non-JSON line from server: %r", line[:120])
                continue
            if message.get("id") == msg_id:
                return message
            # Notifications and unrelated ids are logged and dropped.
            logger.debug("ignoring message id=%r method=%r", message.get("id"), message.get("method"))

    def request(
        self, method: str, params: dict[str, Any] | None = None, timeout: float | None = None
    ) -> dict[str, Any]:
        self._msg_id += 1
        msg: dict[str, Any] = {"jsonrpc": "2.0", "id": self._msg_id, "method": method}
        if params is not None:
            msg["params"] = params
        self._write(msg)
        return self._read_result(self._msg_id, timeout or self.call_timeout)

    def notify(self, method: str, params: dict[str, Any] | None = None) -> None:
        msg: dict[str, Any] = {"jsonrpc": "2.0", "method": method}
        if params is not None:
            msg["params"] = params
        self._write(msg)


def connect(
    server_command: list[str],
    env: dict[str, str] | None = None,
    oracle_out: str | Path | None = None,
    manifest_path: str | Path | None = None,
    handshake_timeout: float = DEFAULT_HANDSHAKE_TIMEOUT,
    call_timeout: float = DEFAULT_CALL_TIMEOUT,
    cwd: str | Path | None = None,
) -> McpSession:
    """Spawn the server, run the initialization handshake, return a session.

    The child env carries the oracle output path and manifest path variables
    so instrumented targets can report sink activity.
    """
    child_env = dict(os.environ)
    if env:
        child_env.update(env)
    if oracle_out is not None:
        child_env[ORACLE_OUT_ENV] = str(oracle_out)
    if manifest_path is not None:
        child_env[MANIFEST_ENV] = str(manifest_path)

    try:
        process = subprocess.Popen(
            server_command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            env=child_env,
            cwd=str(cwd) if cwd else None,
            text=True,
            bufsize=1,
        )
    except OSError as exc:
        raise SessionError(f"failed to spawn {server_command!r}: {exc}") from exc

    session = McpSession(process, server_info={}, call_timeout=call_timeout)
    try:
        result = session.request(
            "initialize",
            {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {},
                "clientInfo": {"name": "mcpaudit", "version": "0.1.0"},
            },
            timeout=handshake_timeout,
        )
    except SessionError:
        session.close()
        raise
    payload = result.get("result") or {}
    echoed = payload.get("protocolVersion")
    if not isinstance(echoed, str) or not echoed:
        session.close()
        raise SessionError(
            "handshake missing protocolVersion; protocol mismatch",
            session.stderr_tail(),
        )
    session.server_info = payload.get("serverInfo") or {}
    session.notify("notifications/initialized")
    return session


def list_tools(session: McpSession) -> list[ToolSchema]:
    """All advertised tools; cursor pagination is followed to exhaustion."""
    tools: list[ToolSchema] = []
    cursor: str | None = None
    while True:
        params: dict[str, Any] = {}
        if cursor is not None:
            params["cursor"] = cursor
        try:
            result = session.request("tools/list", params)
        except SessionError:
            session.alive = False
            raise
        payload = result.get("result") or {}
        for tool in payload.get("tools") or []:
            tools.append(
                ToolSchema(
                    name=tool.get("name", ""),
                    description=tool.get("description", ""),
                    params_schema=tool.get("inputSchema") or {},
                )
            )
        cursor = payload.get("nextCursor")
        if not cursor:
            break
    session.tool_names = {t.name for t in tools}
    return tools


def call_tool(session: McpSession, name: str, args: dict[str, Any]) -> ToolCallRecord:
    """Invoke one discovered tool. Tool-level failures are captured in the
    record, never raised; transport failures mark the record not-ok and kill
    the session."""
    if session.tool_names and name not in session.tool_names:
        raise ValueError(f"tool {name!r} was not advertised by the server")
    ts = time.monotonic()
    try:
        result = session.request("tools/call", {"name": name, "arguments": args})
    except SessionError as exc:
        return ToolCallRecord(
            tool=name, args=args, response=f"transport error: {exc}", ok=False, ts=ts
        )
    if "error" in result:
        err = result["error"]
        text = err.get("message", str(err)) if isinstance(err, dict) else str(err)
        return ToolCallRecord(tool=name, args=args, response=text, ok=False, ts=ts)
    payload = result.get("result") or {}
    is_error = bool(payload.get("isError"))
    return ToolCallRecord(tool=name, args=args, response=payload, ok=not is_error, ts=ts)
