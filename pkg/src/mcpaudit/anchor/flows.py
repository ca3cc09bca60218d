"""Flow-table matching with the fixed +/-1-line sink tolerance."""
from __future__ import annotations

import logging
from pathlib import Path

from .inventory import containment_lookup
from .types import FlowRecord, FunctionRecord, SourceLocation, TaintAlert, VulnClass

logger = logging.getLogger(__name__)

# Exactly one line of tolerance; deliberately not configurable.
LINE_TOLERANCE = 1


def matching_flows(alert: TaintAlert, flows: list[FlowRecord]) -> list[FlowRecord]:
    """All same-class flows whose sink is within tolerance of the alert sink.

    Ordered by line distance, ties by flow-table order.
    """
    scored: list[tuple[int, int, FlowRecord]] = []
    for idx, flow in enumerate(flows):
        if flow.category != alert.vuln_class:
            continue
        if flow.sink_loc.file != alert.sink_loc.file:
            continue
        distance = abs(flow.sink_loc.start_line - alert.sink_loc.start_line)
        if distance <= LINE_TOLERANCE:
            scored.append((distance, idx, flow))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [flow for _, _, flow in scored]


def match_flow(alert: TaintAlert, flows: list[FlowRecord]) -> FlowRecord | None:
    """Best flow match for the alert, or None when none is within tolerance."""
    matches = matching_flows(alert, flows)
    return matches[0] if matches else None


def load_flow_table(path: str | Path) -> list[FlowRecord]:
    """Load the tab-separated sidecar:
    category, src_file, src_line, sink_file, sink_line, src_fn, sink_fn.
    """
    records: list[FlowRecord] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            logger.warning("flow table line %d: expected 7 fields, got %d", lineno, len(parts))
            continue
        category, src_file, src_line, sink_file, sink_line, src_fn, sink_fn = parts
        try:
            records.append(
                FlowRecord(
                    category=VulnClass(category),
                    source_loc=SourceLocation.line(src_file, int(src_line)),
                    sink_loc=SourceLocation.line(sink_file, int(sink_line)),
                    source_fn=src_fn,
                    sink_fn=sink_fn,
                )
            )
        except (ValueError, KeyError) as exc:
            logger.warning("flow table line %d: %s", lineno, exc)
    return records


def synthesize_flows(
    alerts: list[TaintAlert], inventory: list[FunctionRecord]
) -> list[FlowRecord]:
    """Lower-confidence flows built from SARIF codeFlow endpoints.

    Used when no sidecar flow table accompanies a SARIF document; confirmed
    then means endpoint-consistent rather than independently re-proved.
    Function identities are filled by containment lookup where possible.
    """
    flows: list[FlowRecord] = []
    for alert in alerts:
        if not alert.path_steps:
            continue
        source_loc, sink_loc = alert.path_steps[0], alert.path_steps[-1]
        src_anchor = containment_lookup(source_loc, inventory)
        sink_anchor = containment_lookup(sink_loc, inventory)
        flows.append(
            FlowRecord(
                category=alert.vuln_class,
                source_loc=source_loc,
                sink_loc=sink_loc,
                source_fn=src_anchor.qualified_name if src_anchor else "",
                sink_fn=sink_anchor.qualified_name if sink_anchor else "",
            )
        )
    return flows
