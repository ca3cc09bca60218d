"""Minimal newline-delimited JSON-RPC stdio loop for fixture MCP servers."""
import json
import sys

PROTOCOL_VERSION = "2024-11-05"


def string_tool(name, description, param):
    return {
        "name": name,
        "description": description,
        "inputSchema": {
            "type": "object",
            "properties": {param: {"type": "string"}},
            "required": [param],
        },
    }


def _reply(msg_id, result):
    sys.stdout.write(json.dumps({"jsonrpc": "2.0", "id": msg_id, "result": result}) + "\n")
    sys.stdout.flush()


def _reply_error(msg_id, code, message):
    sys.stdout.write(
        json.dumps({"jsonrpc": "2.0", "id": msg_id, "error": {"code": code, "message": message}})
        + "\n"
    )
    sys.stdout.flush()


def serve(name, tools, handlers):
    """Single-session loop: initialize, tools/list, tools/call."""
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
                    "serverInfo": {"name": name, "version": "0.1.0"},
                },
            )
        elif method == "notifications/initialized":
            continue
        elif method == "tools/list":
            _reply(msg_id, {"tools": tools})
        elif method == "tools/call":
            params = message.get("params") or {}
            tool_name = params.get("name")
            handler = handlers.get(tool_name)
            if handler is None:
                _reply_error(msg_id, -32602, "unknown tool: %s" % tool_name)
                continue
            try:
                text = handler(params.get("arguments") or {})
                _reply(msg_id, {"content": [{"type": "text", "text": text}], "isError": False})
            except Exception as exc:  # tool-level failure, not a protocol error
                _reply(
                    msg_id,
                    {
                        "content": [
                            {"type": "text", "text": "tool error: %s" % exc.__class__.__name__}
                        ],
                        "isError": True,
                    },
                )
        elif msg_id is not None:
            _reply_error(msg_id, -32601, "method not found: %s" % method)
