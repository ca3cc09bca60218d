"""Record types produced and consumed by the static anchoring stage."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any


class VulnClass(str, enum.Enum):
    COMMAND_INJECTION = "command_injection"
    SSRF = "ssrf"
    PATH_INJECTION = "path_injection"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SourceLocation:
    """A 1-based line span within one file; columns are optional."""

    file: str
    start_line: int
    end_line: int
    start_col: int | None = None
    end_col: int | None = None

    def __post_init__(self) -> None:
        if self.start_line < 1:
            raise ValueError(f"start_line must be >= 1, got {self.start_line}")
        if self.end_line < self.start_line:
            raise ValueError(
                f"end_line {self.end_line} precedes start_line {self.start_line}"
            )

    @classmethod
    def line(cls, file: str, line: int) -> "SourceLocation":
        return cls(file=file, start_line=line, end_line=line)

    def to_dict(self) -> dict[str, Any]:
        return {
            "file": self.file,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "start_col": self.start_col,
            "end_col": self.end_col,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SourceLocation":
        return cls(
            file=d["file"],
            start_line=d["start_line"],
            end_line=d["end_line"],
            start_col=d.get("start_col"),
            end_col=d.get("end_col"),
        )


@dataclass(frozen=True)
class TaintAlert:
    """One analyzer result mapped to a supported vulnerability class."""

    alert_id: str
    vuln_class: VulnClass
    source_loc: SourceLocation
    sink_loc: SourceLocation
    path_steps: tuple[SourceLocation, ...] = ()
    rule_id: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "alert_id": self.alert_id,
            "vuln_class": self.vuln_class.value,
            "source_loc": self.source_loc.to_dict(),
            "sink_loc": self.sink_loc.to_dict(),
            "path_steps": [s.to_dict() for s in self.path_steps],
            "rule_id": self.rule_id,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TaintAlert":
        return cls(
            alert_id=d["alert_id"],
            vuln_class=VulnClass(d["vuln_class"]),
            source_loc=SourceLocation.from_dict(d["source_loc"]),
            sink_loc=SourceLocation.from_dict(d["sink_loc"]),
            path_steps=tuple(SourceLocation.from_dict(s) for s in d.get("path_steps", [])),
            rule_id=d.get("rule_id", ""),
        )


@dataclass(frozen=True)
class FunctionRecord:
    """One function definition with its file-relative line range."""

    file: str
    qualified_name: str
    start_line: int
    end_line: int

    @property
    def span(self) -> int:
        return self.end_line - self.start_line

    def encloses(self, loc: SourceLocation) -> bool:
        return (
            self.file == loc.file
            and self.start_line <= loc.start_line <= self.end_line
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "file": self.file,
            "qualified_name": self.qualified_name,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "span": self.span,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FunctionRecord":
        return cls(
            file=d["file"],
            qualified_name=d["qualified_name"],
            start_line=d["start_line"],
            end_line=d["end_line"],
        )


@dataclass(frozen=True)
class FlowRecord:
    """Flat source-to-sink record from the flow confirmation pass."""

    category: VulnClass
    source_loc: SourceLocation
    sink_loc: SourceLocation
    source_fn: str
    sink_fn: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "category": self.category.value,
            "source_loc": self.source_loc.to_dict(),
            "sink_loc": self.sink_loc.to_dict(),
            "source_fn": self.source_fn,
            "sink_fn": self.sink_fn,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FlowRecord":
        return cls(
            category=VulnClass(d["category"]),
            source_loc=SourceLocation.from_dict(d["source_loc"]),
            sink_loc=SourceLocation.from_dict(d["sink_loc"]),
            source_fn=d["source_fn"],
            sink_fn=d["sink_fn"],
        )


@dataclass
class EnrichedAlert:
    """Alert augmented with anchor, confirmed-flow sources, and candidates.

    `sink_function` carries the confirmed flow's sink identity forward so the
    fuzzing stage can bind its target sink without re-running containment.
    """

    alert: TaintAlert
    anchor_function: FunctionRecord | None
    source_functions: list[str] = field(default_factory=list)
    tool_candidates: list[str] = field(default_factory=list)
    anchored_flow_confirmed: bool = False
    sink_function: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "alert": self.alert.to_dict(),
            "anchor_function": self.anchor_function.to_dict() if self.anchor_function else None,
            "source_functions": list(self.source_functions),
            "tool_candidates": list(self.tool_candidates),
            "anchored_flow_confirmed": self.anchored_flow_confirmed,
            "sink_function": self.sink_function,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EnrichedAlert":
        anchor = d.get("anchor_function")
        return cls(
            alert=TaintAlert.from_dict(d["alert"]),
            anchor_function=FunctionRecord.from_dict(anchor) if anchor else None,
            source_functions=list(d.get("source_functions", [])),
            tool_candidates=list(d.get("tool_candidates", [])),
            anchored_flow_confirmed=d.get("anchored_flow_confirmed", False),
            sink_function=d.get("sink_function"),
        )


@dataclass(frozen=True)
class CallChain:
    """Fuzzing target: tool candidate -> vuln class @ source line."""

    chain_id: str
    tool_candidate: str
    vuln_class: VulnClass
    source_line: int
    file: str

    def describe(self) -> str:
        return (
            f"{self.tool_candidate} -> {self.vuln_class.value}"
            f"@{self.file}:{self.source_line}"
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "chain_id": self.chain_id,
            "tool_candidate": self.tool_candidate,
            "vuln_class": self.vuln_class.value,
            "source_line": self.source_line,
            "file": self.file,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CallChain":
        return cls(
            chain_id=d["chain_id"],
            tool_candidate=d["tool_candidate"],
            vuln_class=VulnClass(d["vuln_class"]),
            source_line=d["source_line"],
            file=d["file"],
        )


# Names that never identify an MCP tool handler. Configurable; these are the
# defaults (anonymous and module-level synthetic names).
DEFAULT_PLACEHOLDER_NAMES = frozenset(
    {"", "<anonymous>", "lambda", "<lambda>", "<module>", "<toplevel>"}
)


def is_placeholder_name(
    name: str, placeholders: frozenset[str] = DEFAULT_PLACEHOLDER_NAMES
) -> bool:
    """True when the last dotted segment is an anonymous/synthetic name."""
    last = name.rsplit(".", 1)[-1]
    return name in placeholders or last in placeholders
