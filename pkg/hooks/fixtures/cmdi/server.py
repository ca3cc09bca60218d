"""Intentionally vulnerable fixture: tool argument interpolated into a shell
command. The injected payloads used by the tests only run `echo`."""
import subprocess
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "_lib"))
from stdio_rpc import serve, string_tool


def run_diagnostics(target):
    cmd = "echo scanning " + target
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
    return proc.stdout + proc.stderr


if __name__ == "__main__":
    serve(
        "fixture-cmdi",
        [string_tool("run_diagnostics", "Run a connectivity diagnostic for a host.", "target")],
        {"run_diagnostics": lambda args: run_diagnostics(args["target"])},
    )
