"""SARIF 2.1.0 ingestion: path-problem results to taint alerts."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any

from .types import SourceLocation, TaintAlert, VulnClass

logger = logging.getLogger(__name__)

# Rule-id fragments mapped to the supported vulnerability classes. Matching is
# case-insensitive substring search over the SARIF ruleId; anything else is an
# unsupported rule and the result is skipped (and counted).
RULE_CLASS_PATTERNS: tuple[tuple[str, VulnClass], ...] = (
    ("command-line-injection", VulnClass.COMMAND_INJECTION),
    ("command-injection", VulnClass.COMMAND_INJECTION),
    ("shell-command", VulnClass.COMMAND_INJECTION),
    ("unsafe-shell", VulnClass.COMMAND_INJECTION),
    ("request-forgery", VulnClass.SSRF),
    ("full-ssrf", VulnClass.SSRF),
    ("partial-ssrf", VulnClass.SSRF),
    ("ssrf", VulnClass.SSRF),
    ("path-injection", VulnClass.PATH_INJECTION),
    ("tainted-path", VulnClass.PATH_INJECTION),
    ("path-traversal", VulnClass.PATH_INJECTION),
    ("zipslip", VulnClass.PATH_INJECTION),
)


class SarifError(ValueError):
    """Malformed SARIF document; carries the failing byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@dataclass
class SarifParse:
    """Alerts plus per-result skip diagnostics."""

    alerts: list[TaintAlert] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)


def classify_rule(rule_id: str) -> VulnClass | None:
    low = rule_id.lower()
    for fragment, klass in RULE_CLASS_PATTERNS:
        if fragment in low:
            return klass
    return None


def parse_sarif(data: bytes | str) -> SarifParse:
    """Parse a SARIF 2.1.0 document into taint alerts.

    One alert per result whose rule maps to a supported class. Source and sink
    locations come from the result's codeFlow endpoints when present,
    otherwise both fall back to the result location. Results without any
    usable location are skipped with a diagnostic.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise SarifError(
            f"malformed SARIF document: {exc.msg} at byte {byte_offset}",
            offset=byte_offset,
        ) from exc
    if not isinstance(doc, dict) or "runs" not in doc:
        raise SarifError("malformed SARIF document: missing 'runs'", offset=0)

    out = SarifParse()
    ordinal = 0
    for run in doc.get("runs") or []:
        for result in run.get("results") or []:
            ordinal += 1
            rule_id = result.get("ruleId") or ""
            klass = classify_rule(rule_id)
            if klass is None:
                msg = f"result #{ordinal}: unsupported rule {rule_id!r}, skipped"
                out.skipped.append(msg)
                logger.debug(msg)
                continue
            steps = _code_flow_steps(result)
            if steps:
                source_loc, sink_loc = steps[0], steps[-1]
            else:
                loc = _result_location(result)
                if loc is None:
                    msg = f"result #{ordinal}: no source location, skipped"
                    out.skipped.append(msg)
                    logger.debug(msg)
                    continue
                source_loc = sink_loc = loc
            out.alerts.append(
                TaintAlert(
                    alert_id=result.get("guid") or f"sarif-{ordinal:04d}",
                    vuln_class=klass,
                    source_loc=source_loc,
                    sink_loc=sink_loc,
                    path_steps=tuple(steps),
                    rule_id=rule_id,
                )
            )
    return out


def _physical_location(node: dict[str, Any]) -> SourceLocation | None:
    phys = node.get("physicalLocation") or {}
    art = phys.get("artifactLocation") or {}
    uri = art.get("uri")
    region = phys.get("region") or {}
    start = region.get("startLine")
    if not uri or not start:
        return None
    return SourceLocation(
        file=uri,
        start_line=start,
        end_line=region.get("endLine") or start,
        start_col=region.get("startColumn"),
        end_col=region.get("endColumn"),
    )


def _result_location(result: dict[str, Any]) -> SourceLocation | None:
    for loc in result.get("locations") or []:
        parsed = _physical_location(loc)
        if parsed is not None:
            return parsed
    return None


def _code_flow_steps(result: dict[str, Any]) -> list[SourceLocation]:
    steps: list[SourceLocation] = []
    for flow in result.get("codeFlows") or []:
        for thread in flow.get("threadFlows") or []:
            for entry in thread.get("locations") or []:
                parsed = _physical_location(entry.get("location") or {})
                if parsed is not None:
                    steps.append(parsed)
        if steps:
            break  # first complete codeFlow wins
    return steps
