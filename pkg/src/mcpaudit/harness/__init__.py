"""MCP stdio harness: session, surrogate agent, oracle channel."""
from .agent import AGENT_SYSTEM_PROMPT, DEFAULT_MAX_STEPS, run_agent
from .evidence import ExecutionEvidence, OracleHit, ToolCallRecord, ToolSchema
from .oracle import (
    MANIFEST_ENV,
    ORACLE_OUT_ENV,
    OracleMarker,
    OracleWatcher,
    collect_oracle,
)
from .session import McpSession, SessionError, call_tool, connect, list_tools

__all__ = [
    "AGENT_SYSTEM_PROMPT",
    "DEFAULT_MAX_STEPS",
    "ExecutionEvidence",
    "MANIFEST_ENV",
    "McpSession",
    "ORACLE_OUT_ENV",
    "OracleHit",
    "OracleMarker",
    "OracleWatcher",
    "SessionError",
    "ToolCallRecord",
    "ToolSchema",
    "call_tool",
    "collect_oracle",
    "connect",
    "list_tools",
    "run_agent",
]
