"""Merge pass: anchor alerts to handlers and fan out call chains."""
from __future__ import annotations

import logging

from .flows import matching_flows
from .inventory import containment_lookup
from .types import (
    CallChain,
    EnrichedAlert,
    FlowRecord,
    FunctionRecord,
    TaintAlert,
    is_placeholder_name,
)

logger = logging.getLogger(__name__)


def enrich_alerts(
    alerts: list[TaintAlert],
    inventory: list[FunctionRecord],
    flows: list[FlowRecord],
) -> list[EnrichedAlert]:
    """Attach the structural anchor and confirmed-flow evidence to each alert.

    Tool candidates prefer confirmed-flow source functions over the anchor
    function; anonymous and module-level placeholders are excluded. Alerts
    with no flow match keep the anchor but are marked unconfirmed. Alerts
    with neither anchor nor flow are still emitted, with empty candidates.
    """
    enriched: list[EnrichedAlert] = []
    for alert in alerts:
        anchor = containment_lookup(alert.source_loc, inventory)
        matches = matching_flows(alert, flows)

        source_functions: list[str] = []
        for flow in matches:
            if flow.source_fn not in source_functions:
                source_functions.append(flow.source_fn)

        candidates: list[str] = []
        for name in source_functions:
            if not is_placeholder_name(name) and name not in candidates:
                candidates.append(name)
        if anchor is not None:
            name = anchor.qualified_name
            if not is_placeholder_name(name) and name not in candidates:
                candidates.append(name)

        if anchor is None and not matches:
            logger.info(
                "alert %s: no anchor and no confirmed flow; emitted with empty candidates",
                alert.alert_id,
            )

        enriched.append(
            EnrichedAlert(
                alert=alert,
                anchor_function=anchor,
                source_functions=source_functions,
                tool_candidates=candidates,
                anchored_flow_confirmed=bool(matches),
                sink_function=matches[0].sink_fn if matches else None,
            )
        )
    return enriched


def emit_call_chains(enriched: list[EnrichedAlert]) -> list[CallChain]:
    """One chain per (alert, candidate) pair, preserving candidate order."""
    chains: list[CallChain] = []
    skipped = 0
    for item in enriched:
        if not item.tool_candidates:
            skipped += 1
            continue
        for ordinal, candidate in enumerate(item.tool_candidates):
            chains.append(
                CallChain(
                    chain_id=f"{item.alert.alert_id}#{ordinal}",
                    tool_candidate=candidate,
                    vuln_class=item.alert.vuln_class,
                    source_line=item.alert.source_loc.start_line,
                    file=item.alert.source_loc.file,
                )
            )
    if skipped:
        logger.info("%d alert(s) produced no chains (empty candidate lists)", skipped)
    return chains
