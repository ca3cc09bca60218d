"""Prompt candidates with lineage, scores, and trigger outcome."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..feedback.scoring import RoundScores
from ..feedback.validation import ValidatorVerdict


@dataclass
class Chromosome:
    id: str
    prompt: str
    style: str
    chain_id: str
    round: int
    parent_id: str | None = None
    mutator_used: str | None = None  # "structure" | "parameter"
    scores: RoundScores | None = None
    verdict: ValidatorVerdict | None = None
    evidence_ref: str | None = None
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.round < 0:
            raise ValueError("round must be >= 0")
        if (self.parent_id is not None) != (self.round > 0):
            raise ValueError("parent_id present iff round > 0")

    @property
    def is_hit(self) -> bool:
        return bool(self.verdict and self.verdict.is_hit)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "style": self.style,
            "chain_id": self.chain_id,
            "parent_id": self.parent_id,
            "mutator_used": self.mutator_used,
            "round": self.round,
            "degenerate": self.degenerate,
            "scores": self.scores.to_dict() if self.scores else None,
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "evidence_ref": self.evidence_ref,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Chromosome":
        scores = d.get("scores")
        verdict = d.get("verdict")
        return cls(
            id=d["id"],
            prompt=d["prompt"],
            style=d["style"],
            chain_id=d["chain_id"],
            round=d["round"],
            parent_id=d.get("parent_id"),
            mutator_used=d.get("mutator_used"),
            scores=RoundScores.from_dict(scores) if scores else None,
            verdict=ValidatorVerdict.from_dict(verdict) if verdict else None,
            evidence_ref=d.get("evidence_ref"),
            degenerate=d.get("degenerate", False),
        )
