"""Finding aggregation: journal records at stage sink_reached or beyond,
deduplicated and grouped by vulnerability category.

Report JSON is deterministic: stable key order, no wall-clock values.
Volatile measurements (timings, event timestamps) live in metrics.json and
the evidence sidecar instead, so replays and reruns are byte-identical.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..anchor.types import CallChain, VulnClass
from ..feedback.validation import TriggerStage, ValidatorVerdict
from ..harness.evidence import OracleHit
from .journal import read_evidence, read_journal

REPORT_SCHEMA_VERSION = 1

STATUS_OK = "ok"
STATUS_NO_CHAINS = "no anchored chains"

_WS = re.compile(r"\s+")


def normalize_prompt(prompt: str) -> str:
    return _WS.sub(" ", prompt).strip().casefold()


@dataclass
class Finding:
    category: VulnClass
    prompt: str
    chain: CallChain
    oracle_evidence: list[OracleHit]
    verdict: ValidatorVerdict

    def __post_init__(self) -> None:
        if self.verdict.stage < TriggerStage.SINK_REACHED:
            raise ValueError("findings require stage >= sink_reached")

    def to_dict(self) -> dict[str, Any]:
        return {
            "category": self.category.value,
            "prompt": self.prompt,
            "chain": self.chain.to_dict(),
            # ts/pid are volatile; the report keeps the reproducible fields.
            "oracle_evidence": [
                {
                    "sink": h.sink,
                    "category": h.category.value,
                    "args_preview": h.args_preview,
                    "enclosing_function": h.enclosing_function,
                    "line": h.line,
                }
                for h in self.oracle_evidence
            ],
            "verdict": self.verdict.to_dict(),
        }


@dataclass
class RunMetrics:
    phase1_seconds: float = 0.0
    phase23_seconds: float = 0.0
    total_seconds: float = 0.0
    rounds_executed: int = 0
    tokens: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase1_seconds": self.phase1_seconds,
            "phase23_seconds": self.phase23_seconds,
            "total_seconds": self.total_seconds,
            "rounds_executed": self.rounds_executed,
            "tokens": self.tokens,
        }

    def deterministic_subset(self) -> dict[str, Any]:
        return {"rounds_executed": self.rounds_executed, "tokens": self.tokens}


@dataclass
class Report:
    status: str
    findings: dict[str, list[Finding]]
    chains: list[CallChain]
    metrics: dict[str, Any] = field(default_factory=dict)

    def finding_count(self) -> int:
        return sum(len(v) for v in self.findings.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "status": self.status,
            "findings": {
                category.value: [f.to_dict() for f in self.findings.get(category.value, [])]
                for category in VulnClass
            },
            "chains": [c.to_dict() for c in self.chains],
            "metrics": self.metrics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path: str | Path) -> Path:
        out = Path(path)
        out.write_text(self.to_json(), encoding="utf-8")
        return out


def aggregate(
    journal: str | Path,
    chains: list[CallChain] | None = None,
    metrics: RunMetrics | None = None,
    status: str = STATUS_OK,
) -> Report:
    """Build the report from a run journal.

    Findings are every journal chromosome whose verdict stage is
    sink_reached or beyond (independent of is_hit), deduplicated by
    (chain_id, stage, normalized prompt), grouped into the three categories.
    """
    evidence_by_ref = read_evidence(journal)
    findings: dict[str, list[Finding]] = {v.value: [] for v in VulnClass}
    seen: set[tuple[str, int, str]] = set()
    chain_index: dict[str, CallChain] = {c.chain_id: c for c in (chains or [])}

    for record in read_journal(journal):
        chromosome = record.chromosome
        chain_index.setdefault(record.chain.chain_id, record.chain)
        verdict = chromosome.verdict
        if verdict is None or verdict.stage < TriggerStage.SINK_REACHED:
            continue
        key = (
            chromosome.chain_id,
            int(verdict.stage),
            normalize_prompt(chromosome.prompt),
        )
        if key in seen:
            continue
        seen.add(key)
        evidence = (
            evidence_by_ref.get(chromosome.evidence_ref)
            if chromosome.evidence_ref
            else None
        )
        findings[record.chain.vuln_class.value].append(
            Finding(
                category=record.chain.vuln_class,
                prompt=chromosome.prompt,
                chain=record.chain,
                oracle_evidence=list(evidence.oracle_hits) if evidence else [],
                verdict=verdict,
            )
        )

    ordered_chains = chains if chains is not None else list(chain_index.values())
    return Report(
        status=status,
        findings=findings,
        chains=list(ordered_chains),
        metrics=metrics.deterministic_subset() if metrics else {},
    )
