#!/usr/bin/env python3
"""Empirical check of the seed scheduler's weighted sampling.

Draws from a pool with fitness values {3, 5, 7} (weights {1, 3, 5}) with
penalties frozen, and prints observed vs expected frequencies, then a second
pass with penalties live to show the self-limiting behavior.
"""
import argparse
import random
from collections import Counter

from mcpaudit.evolve.chromosome import Chromosome
from mcpaudit.feedback.pool import SeedPoolEntry, fitness, schedule_seed
from mcpaudit.feedback.scoring import RoundScores


def entry(s_str: float, ident: str, chain_id: str = "c1") -> SeedPoolEntry:
    return SeedPoolEntry(
        chromosome=Chromosome(
            id=ident, prompt="p", style="s", chain_id=chain_id, round=0,
            scores=RoundScores(s_str=s_str, s_par=0),
        )
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--draws", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pool = [entry(3, "F=3"), entry(5, "F=5"), entry(7, "F=7")]
    rng = random.Random(args.seed)
    counts: Counter[str] = Counter()
    for _ in range(args.draws):
        counts[schedule_seed(pool, rng).chromosome.id] += 1
        for e in pool:
            e.rho = e.kappa = 0.0

    print(f"{args.draws} draws, penalties frozen:")
    for ident, expected in (("F=3", 1 / 9), ("F=5", 3 / 9), ("F=7", 5 / 9)):
        observed = counts[ident] / args.draws
        print(f"  {ident}: observed {observed:.4f}  expected {expected:.4f}")

    print("\npenalties live, 8 selections from one dominant seed:")
    live = [entry(9, "dominant", "chainA"), entry(2, "other", "chainB")]
    rng = random.Random(args.seed)
    for i in range(8):
        selected = schedule_seed(live, rng)
        values = ", ".join(
            f"{e.chromosome.id}: F={fitness(e):.1f} rho={e.rho:.1f} kappa={e.kappa:.1f}"
            for e in live
        )
        print(f"  pick {i + 1}: {selected.chromosome.id:<9} -> {values}")
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
