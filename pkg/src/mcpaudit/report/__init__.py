"""Journaling, finding aggregation, and pipeline orchestration."""
from .aggregate import (
    Finding,
    Report,
    RunMetrics,
    STATUS_NO_CHAINS,
    STATUS_OK,
    aggregate,
    normalize_prompt,
)
from .journal import JournalRecord, JournalWriter, read_evidence, read_journal
from .pipeline import ScanConfig, load_static_artifacts, run_dynamic_phase, run_static_phase, scan

__all__ = [
    "Finding",
    "JournalRecord",
    "JournalWriter",
    "Report",
    "RunMetrics",
    "STATUS_NO_CHAINS",
    "STATUS_OK",
    "ScanConfig",
    "aggregate",
    "load_static_artifacts",
    "normalize_prompt",
    "read_evidence",
    "read_journal",
    "run_dynamic_phase",
    "run_static_phase",
    "scan",
]
