import pytest

from mcpaudit.anchor.types import VulnClass
from mcpaudit.sinks import (
    ConfigurationError,
    SinkRegistry,
    SinkSpec,
    emit_manifest,
    load_registry,
)

from builders import chain

CMDI = VulnClass.COMMAND_INJECTION


def test_default_registry_has_js_exec_at_position_zero():
    registry = load_registry()
    spec = registry.lookup("js", "child_process", "exec")
    assert spec is not None
    assert spec.sink_arg_positions == (0,)
    assert spec.vuln_class is CMDI


def test_spawn_family_monitors_both_argument_positions():
    registry = load_registry()
    for callee in ("spawn", "spawnSync"):
        spec = registry.lookup("js", "child_process", callee)
        assert spec.sink_arg_positions == (0, 1)
    assert registry.lookup("js", "execa", "execa").sink_arg_positions == (0, 1)


def test_ssrf_defaults_to_argument_zero():
    registry = load_registry()
    assert registry.lookup("py", "requests", "get").sink_arg_positions == (0,)
    assert registry.lookup("js", "*", "fetch").sink_arg_positions == (0,)


def test_python_subprocess_family_present():
    registry = load_registry()
    for callee in ("Popen", "call", "check_call", "check_output", "run"):
        assert registry.lookup("py", "subprocess", callee) is not None
    assert registry.lookup("py", "os", "system") is not None
    assert registry.lookup("py", "builtins", "open").vuln_class is VulnClass.PATH_INJECTION


def test_override_adds_custom_sink():
    base = len(load_registry())
    registry = load_registry(
        overrides=[
            {
                "language": "py",
                "vuln_class": "command_injection",
                "module_path": "mytool",
                "callee": "shell",
                "sink_arg_positions": [0],
            }
        ]
    )
    assert len(registry) == base + 1
    assert registry.lookup("py", "mytool", "shell") is not None


def test_override_replaces_by_key():
    base = len(load_registry())
    registry = load_registry(
        overrides=[
            SinkSpec("py", CMDI, "subprocess", "run", (0, 1)),
        ]
    )
    assert len(registry) == base
    assert registry.lookup("py", "subprocess", "run").sink_arg_positions == (0, 1)


def test_duplicate_override_last_wins(caplog):
    registry = load_registry(
        overrides=[
            SinkSpec("py", CMDI, "mytool", "shell", (0,)),
            SinkSpec("py", CMDI, "mytool", "shell", (1,)),
        ]
    )
    assert registry.lookup("py", "mytool", "shell").sink_arg_positions == (1,)
    assert any("last wins" in r.message for r in caplog.records)


def test_registry_round_trips_through_json():
    registry = load_registry()
    restored = SinkRegistry.from_json(registry.to_json())
    assert restored.specs == registry.specs


def test_sink_arg_positions_must_be_non_empty():
    with pytest.raises(ValueError):
        SinkSpec("py", CMDI, "m", "f", ())


def test_manifest_filters_to_repo_language(tmp_path):
    (tmp_path / "app.py").write_text("x = 1\n")
    manifest = emit_manifest([chain()], load_registry(), tmp_path, tmp_path / "o.jsonl")
    assert manifest.sinks
    assert all(s.language == "py" for s in manifest.sinks)
    assert all(s.vuln_class is CMDI for s in manifest.sinks)


def test_manifest_spans_all_chain_classes(tmp_path):
    (tmp_path / "app.py").write_text("x = 1\n")
    chains = [
        chain(chain_id="c1", vuln=CMDI),
        chain(chain_id="c2", vuln=VulnClass.SSRF, tool="fetch_resource"),
    ]
    manifest = emit_manifest(chains, load_registry(), tmp_path, tmp_path / "o.jsonl")
    assert {s.vuln_class for s in manifest.sinks} == {CMDI, VulnClass.SSRF}


def test_chain_class_without_sinks_is_fatal(tmp_path):
    (tmp_path / "app.py").write_text("x = 1\n")
    gutted = SinkRegistry(
        specs=[s for s in load_registry().specs if s.vuln_class is not VulnClass.PATH_INJECTION]
    )
    with pytest.raises(ConfigurationError):
        emit_manifest(
            [chain(vuln=VulnClass.PATH_INJECTION, tool="read_document")],
            gutted,
            tmp_path,
            tmp_path / "o.jsonl",
        )


def test_manifest_filtering_idempotent_and_order_independent(tmp_path):
    (tmp_path / "app.py").write_text("x = 1\n")
    registry = load_registry()
    chains = [
        chain(chain_id="c1", vuln=CMDI),
        chain(chain_id="c2", vuln=VulnClass.SSRF, tool="fetch_resource"),
    ]
    forward = emit_manifest(chains, registry, tmp_path, tmp_path / "o.jsonl")
    reverse = emit_manifest(list(reversed(chains)), registry, tmp_path, tmp_path / "o.jsonl")
    assert forward.sinks == reverse.sinks
    again = emit_manifest(forward.chains, registry, tmp_path, tmp_path / "o.jsonl")
    assert again.sinks == forward.sinks


def test_manifest_round_trips_and_validates(tmp_path):
    import json

    (tmp_path / "app.py").write_text("x = 1\n")
    manifest = emit_manifest([chain()], load_registry(), tmp_path, tmp_path / "o.jsonl")
    path = manifest.write(tmp_path / "manifest.json")
    from mcpaudit.sinks import InstrumentationManifest

    restored = InstrumentationManifest.from_dict(json.loads(path.read_text()))
    assert restored.sinks == manifest.sinks
    assert restored.chains == manifest.chains
    assert restored.oracle_out == manifest.oracle_out
