"""Seed pool with fitness-weighted scheduling and diversity penalties.

Final fitness: F = s_str + s_par - rho - kappa. Selection samples from the
top-k entries by F (k=5) with weights F - min(top-k F) + 1. After a
selection, the chosen entry's rho grows by 0.5 and kappa grows by 0.5 for
every entry sharing the selected chain (itself included), so repeated
selection of one seed or one call chain is self-limiting.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ..evolve.chromosome import Chromosome

logger = logging.getLogger(__name__)

TOP_K = 5
SELECTION_PENALTY_INCREMENT = 0.5
CHAIN_PENALTY_INCREMENT = 0.5


class SchedulingError(RuntimeError):
    pass


@dataclass
class SeedPoolEntry:
    chromosome: "Chromosome"
    rho: float = 0.0
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if self.rho < 0 or self.kappa < 0:
            raise ValueError("penalties must be non-negative")


def fitness(entry: SeedPoolEntry) -> float:
    scores = entry.chromosome.scores
    if scores is None:
        raise ValueError(f"chromosome {entry.chromosome.id} is unscored")
    return scores.s_str + scores.s_par - entry.rho - entry.kappa


def top_k_entries(pool: list[SeedPoolEntry], k: int = TOP_K) -> list[SeedPoolEntry]:
    # Stable sort: ties at the k boundary keep insertion order.
    ranked = sorted(pool, key=fitness, reverse=True)
    return ranked[:k]


def schedule_seed(pool: list[SeedPoolEntry], rng: random.Random) -> SeedPoolEntry:
    """Weighted draw from the top-k, then apply both penalty increments."""
    if not pool:
        raise SchedulingError("seed pool is empty")
    top = top_k_entries(pool)
    baseline = min(fitness(e) for e in top)
    weights = [fitness(e) - baseline + 1.0 for e in top]
    selected = rng.choices(top, weights=weights, k=1)[0]

    selected.rho += SELECTION_PENALTY_INCREMENT
    chain_id = selected.chromosome.chain_id
    for entry in pool:
        if entry.chromosome.chain_id == chain_id:
            entry.kappa += CHAIN_PENALTY_INCREMENT
    logger.debug(
        "scheduled seed %s (rho=%.1f kappa=%.1f)",
        selected.chromosome.id, selected.rho, selected.kappa,
    )
    return selected
