"""Per-chain taint context: the static outputs consolidated with the live
tool schema, everything seed generation and mutation need to know about one
fuzzing target."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from ..anchor.types import CallChain, EnrichedAlert, SourceLocation, VulnClass
from ..harness.evidence import ToolSchema

logger = logging.getLogger(__name__)


@dataclass
class TaintContext:
    chain: CallChain
    tool_schema: ToolSchema | None
    sink_fn: str
    vuln_class: VulnClass
    taint_path: tuple[SourceLocation, ...] = ()

    def static_hint(self) -> str:
        """Compact static context block injected into prompt templates."""
        schema = (
            json.dumps(self.tool_schema.to_dict(), sort_keys=True)
            if self.tool_schema
            else "unavailable"
        )
        path = " -> ".join(f"{s.file}:{s.start_line}" for s in self.taint_path) or "n/a"
        return (
            f"Static hint: tool schema = {schema}; target sink function = "
            f"{self.sink_fn}; vulnerability class = {self.vuln_class.value}; "
            f"taint path = {path}"
        )


def _find_alert(chain: CallChain, enriched_report: list[EnrichedAlert]) -> EnrichedAlert | None:
    for item in enriched_report:
        if (
            item.alert.source_loc.file == chain.file
            and item.alert.source_loc.start_line == chain.source_line
            and item.alert.vuln_class == chain.vuln_class
            and chain.tool_candidate in item.tool_candidates
        ):
            return item
    # Relax the candidate constraint: the chain may target a renamed tool.
    for item in enriched_report:
        if (
            item.alert.source_loc.file == chain.file
            and item.alert.source_loc.start_line == chain.source_line
            and item.alert.vuln_class == chain.vuln_class
        ):
            return item
    return None


def bind_tool_schema(
    tool_name: str, discovered_tools: list[ToolSchema]
) -> ToolSchema | None:
    """Exact-name match, then case-insensitive, else absent with diagnostic."""
    for tool in discovered_tools:
        if tool.name == tool_name:
            return tool
    folded = tool_name.casefold()
    for tool in discovered_tools:
        if tool.name.casefold() == folded:
            logger.warning(
                "tool %r bound case-insensitively to advertised %r", tool_name, tool.name
            )
            return tool
    logger.warning("no advertised tool matches candidate %r", tool_name)
    return None


def build_taint_context(
    chain: CallChain,
    discovered_tools: list[ToolSchema],
    enriched_report: list[EnrichedAlert],
) -> TaintContext:
    """Bind the live tool schema and static flow details for one chain.

    An absent schema only degrades seed quality; it is never fatal.
    """
    schema = bind_tool_schema(chain.tool_candidate, discovered_tools)
    alert = _find_alert(chain, enriched_report)
    sink_fn = ""
    taint_path: tuple[SourceLocation, ...] = ()
    if alert is not None:
        taint_path = alert.alert.path_steps
        if alert.sink_function:
            sink_fn = alert.sink_function
        else:
            sink = alert.alert.sink_loc
            sink_fn = f"{sink.file.rsplit('/', 1)[-1]}:{sink.start_line}"
    return TaintContext(
        chain=chain,
        tool_schema=schema,
        sink_fn=sink_fn or chain.tool_candidate,
        vuln_class=chain.vuln_class,
        taint_path=taint_path,
    )
