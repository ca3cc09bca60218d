"""Runtime sink interposition for Python targets.

Activated at interpreter startup (sitecustomize on PYTHONPATH). Reads the
instrumentation manifest named by $VIPER_MANIFEST, wraps every resolvable
Python sink it lists, and appends one JSONL oracle event per delegated sink
call to $VIPER_ORACLE_OUT before delegating with unmodified arguments.

Without both environment variables the shim is inert. Event-writing failures
are swallowed: the target must never break because of instrumentation.
"""
from __future__ import annotations

import importlib
import json
import os
import sys
import threading
import time

MANIFEST_ENV = "VIPER_MANIFEST"
ORACLE_ENV = "VIPER_ORACLE_OUT"
PREVIEW_CAP = 2048

_state = threading.local()
_WRAPPED_MARKER = "__viper_hooked__"


def _log(message: str) -> None:
    try:
        sys.stderr.write(f"[viper-hook] {message}\n")
    except OSError:
        pass


def _preview(args: tuple, kwargs: dict) -> str:
    parts = []
    for value in args:
        try:
            if isinstance(value, (list, tuple)):
                parts.append(" ".join(str(v) for v in value))
            else:
                parts.append(str(value))
        except Exception:
            parts.append(f"<{type(value).__name__}>")
    for key in sorted(kwargs):
        try:
            parts.append(f"{key}={kwargs[key]!r}")
        except Exception:
            parts.append(f"{key}=<unreprable>")
    return " ".join(parts)[:PREVIEW_CAP]


def _caller_location() -> tuple[str | None, int | None]:
    frame = sys._getframe()
    own_file = frame.f_code.co_filename
    while frame is not None:
        if frame.f_code.co_filename != own_file:
            name = frame.f_code.co_name
            if name == "<module>":
                name = None
            return name, frame.f_lineno
        frame = frame.f_back
    return None, None


def _write_event(oracle_out: str, sink: str, category: str, args: tuple, kwargs: dict) -> None:
    enclosing, line = _caller_location()
    record = {
        "ts": time.time(),
        "pid": os.getpid(),
        "sink": sink,
        "category": category,
        "args_preview": _preview(args, kwargs),
        "enclosing_function": enclosing,
        "line": line,
    }
    payload = (json.dumps(record) + "\n").encode("utf-8", errors="replace")
    try:
        fd = os.open(oracle_out, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, payload)  # one write call: the line stays intact
        finally:
            os.close(fd)
    except OSError:
        pass


def _wrap(original, sink_name: str, category: str, oracle_out: str):
    def hooked(*args, **kwargs):
        # Re-entrancy guard: event writing may itself hit wrapped os APIs.
        if not getattr(_state, "suppressed", False):
            _state.suppressed = True
            try:
                _write_event(oracle_out, sink_name, category, args, kwargs)
            finally:
                _state.suppressed = False
        return original(*args, **kwargs)

    try:
        hooked.__name__ = getattr(original, "__name__", sink_name)
        hooked.__qualname__ = getattr(original, "__qualname__", sink_name)
        hooked.__doc__ = getattr(original, "__doc__", None)
    except (AttributeError, TypeError):
        pass
    setattr(hooked, _WRAPPED_MARKER, True)
    return hooked


def _resolve_owner(module_path: str):
    """Import `module_path`, falling back to attribute traversal for dotted
    paths that name a class or object inside a module (e.g. pathlib.Path)."""
    try:
        return importlib.import_module(module_path)
    except ImportError:
        if "." not in module_path:
            raise
    parent_path, _, attr = module_path.rpartition(".")
    parent = _resolve_owner(parent_path)
    return getattr(parent, attr)


def install(manifest_path: str | None = None, oracle_out: str | None = None) -> int:
    """Wrap every resolvable (module_path, callee) from the manifest.

    Returns the number of hooks installed; unresolvable entries are logged
    and skipped, never fatal. Missing configuration leaves the shim inert.
    """
    manifest_path = manifest_path or os.environ.get(MANIFEST_ENV)
    oracle_out = oracle_out or os.environ.get(ORACLE_ENV)
    if not manifest_path or not oracle_out:
        return 0
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, ValueError) as exc:
        _log(f"manifest unreadable ({exc}); shim inert")
        return 0

    installed = 0
    for spec in manifest.get("sinks", []):
        if spec.get("language") != "py":
            continue
        module_path = spec.get("module_path", "")
        callee = spec.get("callee", "")
        if not module_path or not callee or callee == "*":
            continue
        try:
            owner = _resolve_owner(module_path)
        except (ImportError, AttributeError) as exc:
            _log(f"cannot resolve {module_path}: {exc}")
            continue
        target = owner
        parts = callee.split(".")
        try:
            for part in parts[:-1]:
                target = getattr(target, part)
            original = getattr(target, parts[-1])
        except AttributeError as exc:
            _log(f"cannot resolve {module_path}.{callee}: {exc}")
            continue
        if getattr(original, _WRAPPED_MARKER, False):
            continue
        sink_name = f"{module_path}.{callee}" if module_path != "builtins" else callee
        try:
            setattr(
                target,
                parts[-1],
                _wrap(original, sink_name, spec.get("vuln_class", ""), oracle_out),
            )
        except (AttributeError, TypeError) as exc:
            _log(f"cannot wrap {module_path}.{callee}: {exc}")
            continue
        installed += 1
    return installed
