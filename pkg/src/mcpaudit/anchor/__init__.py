"""Static anchoring: alert ingestion, handler resolution, call-chain fan-out."""
from .enrich import emit_call_chains, enrich_alerts
from .flows import load_flow_table, match_flow, matching_flows, synthesize_flows
from .inventory import containment_lookup, scan_function_inventory
from .minitaint import run_mini_taint
from .sarif import SarifError, SarifParse, parse_sarif
from .types import (
    CallChain,
    DEFAULT_PLACEHOLDER_NAMES,
    EnrichedAlert,
    FlowRecord,
    FunctionRecord,
    SourceLocation,
    TaintAlert,
    VulnClass,
    is_placeholder_name,
)

__all__ = [
    "CallChain",
    "DEFAULT_PLACEHOLDER_NAMES",
    "EnrichedAlert",
    "FlowRecord",
    "FunctionRecord",
    "SarifError",
    "SarifParse",
    "SourceLocation",
    "TaintAlert",
    "VulnClass",
    "containment_lookup",
    "emit_call_chains",
    "enrich_alerts",
    "is_placeholder_name",
    "load_flow_table",
    "match_flow",
    "matching_flows",
    "parse_sarif",
    "run_mini_taint",
    "scan_function_inventory",
    "synthesize_flows",
]
