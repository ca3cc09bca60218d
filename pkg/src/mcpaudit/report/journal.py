"""Run journal: one JSONL record per executed candidate, with an evidence
sidecar keyed by evidence_ref for post-hoc replay and reporting."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from ..anchor.types import CallChain
from ..evolve.chromosome import Chromosome
from ..harness.evidence import ExecutionEvidence

logger = logging.getLogger(__name__)

JOURNAL_NAME = "journal.jsonl"
EVIDENCE_NAME = "evidence.jsonl"


@dataclass
class JournalRecord:
    chromosome: Chromosome
    chain: CallChain

    def to_dict(self) -> dict[str, Any]:
        record = self.chromosome.to_dict()
        record["chain"] = self.chain.to_dict()
        return record

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "JournalRecord":
        chain = CallChain.from_dict(d.pop("chain"))
        return cls(chromosome=Chromosome.from_dict(d), chain=chain)


class JournalWriter:
    def __init__(self, out_dir: str | Path, chains: list[CallChain]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.out_dir / JOURNAL_NAME
        self.evidence_path = self.out_dir / EVIDENCE_NAME
        self._chains = {c.chain_id: c for c in chains}
        self._journal = self.journal_path.open("w", encoding="utf-8")
        self._evidence = self.evidence_path.open("w", encoding="utf-8")

    def append(self, chromosome: Chromosome, evidence: ExecutionEvidence) -> None:
        chain = self._chains[chromosome.chain_id]
        record = JournalRecord(chromosome=chromosome, chain=chain)
        self._journal.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        self._journal.flush()
        self._evidence.write(
            json.dumps(
                {"evidence_ref": chromosome.evidence_ref, "evidence": evidence.to_dict()},
                sort_keys=True,
            )
            + "\n"
        )
        self._evidence.flush()

    def close(self) -> None:
        self._journal.close()
        self._evidence.close()

    def __enter__(self) -> "JournalWriter":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def journal_dir_of(journal: str | Path) -> Path:
    path = Path(journal)
    return path if path.is_dir() else path.parent


def read_journal(journal: str | Path) -> Iterator[JournalRecord]:
    path = Path(journal)
    if path.is_dir():
        path = path / JOURNAL_NAME
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            yield JournalRecord.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            logger.warning("journal line %d unreadable: %s", lineno, exc)


def read_evidence(journal: str | Path) -> dict[str, ExecutionEvidence]:
    path = journal_dir_of(journal) / EVIDENCE_NAME
    out: dict[str, ExecutionEvidence] = {}
    if not path.exists():
        return out
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            out[record["evidence_ref"]] = ExecutionEvidence.from_dict(record["evidence"])
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            logger.warning("evidence line %d unreadable: %s", lineno, exc)
    return out
