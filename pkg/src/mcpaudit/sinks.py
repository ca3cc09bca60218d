"""Sink catalog registry and the instrumentation manifest handed to hooks.

The catalog ships as an embedded JSON data file so coverage audits are
diff-based; this module only loads, merges, filters, and serializes it.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .anchor.types import CallChain, VulnClass

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1


class ConfigurationError(RuntimeError):
    """Fatal setup problem (maps to CLI exit code 2)."""


@dataclass(frozen=True)
class SinkSpec:
    """One monitored callee. `callee` of "*" means the module's default export;
    `module_path` of "*" means a bare-name match in any module."""

    language: str  # "py" | "js"
    vuln_class: VulnClass
    module_path: str
    callee: str
    sink_arg_positions: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.language not in ("py", "js"):
            raise ValueError(f"unknown language {self.language!r}")
        if not self.sink_arg_positions:
            raise ValueError("sink_arg_positions must be non-empty")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.language, self.module_path, self.callee)

    def to_dict(self) -> dict[str, Any]:
        return {
            "language": self.language,
            "vuln_class": self.vuln_class.value,
            "module_path": self.module_path,
            "callee": self.callee,
            "sink_arg_positions": list(self.sink_arg_positions),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SinkSpec":
        return cls(
            language=d["language"],
            vuln_class=VulnClass(d["vuln_class"]),
            module_path=d["module_path"],
            callee=d["callee"],
            sink_arg_positions=tuple(d["sink_arg_positions"]),
        )


@dataclass
class SinkRegistry:
    specs: list[SinkSpec] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.specs)

    def for_language(self, language: str) -> list[SinkSpec]:
        return [s for s in self.specs if s.language == language]

    def for_class(self, vuln_class: VulnClass, language: str | None = None) -> list[SinkSpec]:
        return [
            s
            for s in self.specs
            if s.vuln_class == vuln_class and (language is None or s.language == language)
        ]

    def lookup(self, language: str, module_path: str, callee: str) -> SinkSpec | None:
        for spec in self.specs:
            if spec.key == (language, module_path, callee):
                return spec
        return None

    def match_py(self, dotted: str) -> list[SinkSpec]:
        """Specs matching a resolved dotted call like "subprocess.run".

        A bare name (no dot) matches any py spec with that callee.
        """
        if "." in dotted:
            module_path, callee = dotted.rsplit(".", 1)
            return [
                s
                for s in self.specs
                if s.language == "py" and s.callee == callee and s.module_path == module_path
            ]
        return [s for s in self.specs if s.language == "py" and s.callee == dotted]

    def match_js(self, callee: str, module_hint: str | None = None) -> list[SinkSpec]:
        """Specs matching a JS callee, optionally constrained by module."""
        out = []
        for s in self.specs:
            if s.language != "js" or s.callee != callee:
                continue
            if module_hint is None or s.module_path in ("*", module_hint):
                out.append(s)
        return out

    def to_json(self) -> str:
        return json.dumps([s.to_dict() for s in self.specs], indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SinkRegistry":
        return cls(specs=[SinkSpec.from_dict(d) for d in json.loads(text)])


def builtin_specs() -> list[SinkSpec]:
    data = resources.files("mcpaudit.data").joinpath("sinks.json").read_text("utf-8")
    return [SinkSpec.from_dict(d) for d in json.loads(data)]


def load_registry(overrides: Iterable[SinkSpec | dict[str, Any]] | None = None) -> SinkRegistry:
    """Built-in catalog, with overrides merged by (language, module_path, callee).

    Duplicate override keys resolve last-wins with a warning.
    """
    merged: dict[tuple[str, str, str], SinkSpec] = {s.key: s for s in builtin_specs()}
    if overrides:
        seen: set[tuple[str, str, str]] = set()
        for item in overrides:
            spec = item if isinstance(item, SinkSpec) else SinkSpec.from_dict(item)
            if spec.key in seen:
                logger.warning("duplicate sink override %s; last wins", spec.key)
            seen.add(spec.key)
            merged[spec.key] = spec
    return SinkRegistry(specs=list(merged.values()))


@dataclass
class InstrumentationManifest:
    """Startup contract for the runtime hooks: what to wrap, where to report."""

    target_repo: str
    sinks: list[SinkSpec]
    chains: list[CallChain]
    oracle_out: str
    schema_version: int = MANIFEST_SCHEMA_VERSION

    def __post_init__(self) -> None:
        covered = {s.vuln_class for s in self.sinks}
        for chain in self.chains:
            if chain.vuln_class not in covered:
                raise ConfigurationError(
                    f"chain {chain.chain_id}: no sink of class "
                    f"{chain.vuln_class.value} in manifest"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "target_repo": self.target_repo,
            "sinks": [s.to_dict() for s in self.sinks],
            "chains": [c.to_dict() for c in self.chains],
            "oracle_out": self.oracle_out,
        }

    def write(self, path: str | Path) -> Path:
        out = Path(path)
        out.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "InstrumentationManifest":
        return cls(
            target_repo=d["target_repo"],
            sinks=[SinkSpec.from_dict(s) for s in d["sinks"]],
            chains=[CallChain.from_dict(c) for c in d["chains"]],
            oracle_out=d["oracle_out"],
            schema_version=d.get("schema_version", MANIFEST_SCHEMA_VERSION),
        )


def repo_languages(repo: str | Path) -> set[str]:
    root = Path(repo)
    langs: set[str] = set()
    for path in root.rglob("*"):
        if not path.is_file():
            continue
        suffix = path.suffix.lower()
        if suffix == ".py":
            langs.add("py")
        elif suffix in (".js", ".jsx", ".ts", ".tsx", ".mjs", ".cjs"):
            langs.add("js")
    return langs


def emit_manifest(
    chains: list[CallChain],
    registry: SinkRegistry,
    repo: str | Path,
    oracle_out: str | Path,
) -> InstrumentationManifest:
    """Manifest restricted to languages present in the repo and classes
    present in the chains. A chain class with no matching sink is fatal."""
    if not chains:
        raise ConfigurationError("cannot emit manifest without chains")
    langs = repo_languages(repo) or {"py", "js"}
    classes = {c.vuln_class for c in chains}
    sinks = [
        s for s in registry.specs if s.language in langs and s.vuln_class in classes
    ]
    return InstrumentationManifest(
        target_repo=str(repo),
        sinks=sinks,
        chains=list(chains),
        oracle_out=str(oracle_out),
    )
