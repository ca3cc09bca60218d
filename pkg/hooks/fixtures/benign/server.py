"""Benign fixture: same tool surface shape, but every handler is pure
in-process computation over allowlisted data. No sink is ever called, so the
runtime oracle stays silent and static analysis finds no flows."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "_lib"))
from stdio_rpc import serve, string_tool

NOTES = {"readme": "intro text v1", "changelog": "changes v1"}
SERVICES = {"web": "ok", "db": "ok"}


def echo_text(text):
    return "echo: " + text


def read_note(name):
    return NOTES.get(name, "unknown note")


def lookup_status(service):
    if service not in SERVICES:
        return "unknown service"
    return "status: " + SERVICES[service]


if __name__ == "__main__":
    serve(
        "fixture-benign",
        [
            string_tool("echo_text", "Echo a snippet back.", "text"),
            string_tool("read_note", "Read a named note.", "name"),
            string_tool("lookup_status", "Report a service status.", "service"),
        ],
        {
            "echo_text": lambda args: echo_text(args["text"]),
            "read_note": lambda args: read_note(args["name"]),
            "lookup_status": lambda args: lookup_status(args["service"]),
        },
    )
