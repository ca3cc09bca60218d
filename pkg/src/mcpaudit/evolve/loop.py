"""Feedback-driven prompt evolution.

Round structure: every chain is first seeded with four style candidates, all
executed, scored, and validated; the per-chain winner enters the seed pool.
The remaining budget (rounds minus the number of chains) runs evolutionary
iterations: schedule a parent from the pool, pick a mutator, produce four
candidates, execute and assess all of them, add hits to the triggered set,
and carry the winner forward into the pool.
"""
from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from ..anchor.types import CallChain, EnrichedAlert
from ..feedback.pool import SeedPoolEntry, SchedulingError, schedule_seed
from ..feedback.scoring import RoundScores, score_round_llm, score_round_rule_based
from ..feedback.validation import (
    ValidatorVerdict,
    validate_llm,
    validate_rule_based,
)
from ..harness.agent import run_agent
from ..harness.evidence import ExecutionEvidence, ToolSchema
from ..harness.oracle import OracleWatcher
from ..harness.session import McpSession, SessionError, list_tools
from ..llm.gateway import LlmGateway
from .chromosome import Chromosome
from .context import TaintContext, build_taint_context
from .mutate import STRUCTURE, parameter_mutate, schedule_mutator, structure_mutate
from .seeds import generate_seeds
from .styles import DEFAULT_STYLES, StyleTemplate

logger = logging.getLogger(__name__)


class EmptyRoundError(RuntimeError):
    """A round produced no scoreable candidates."""


def select_winner(candidates: list[Chromosome]) -> Chromosome:
    """Argmax of the template-selection score G = s_str + s_par.

    Ties break by higher structure score, then higher parameter score, then
    by a validator-labeled successful trigger; residual ties resolve to the
    lowest candidate index (max() keeps the first maximum).
    """
    scored = [c for c in candidates if c.scores is not None]
    if not scored:
        raise EmptyRoundError("no scored candidates to select from")
    return max(
        scored,
        key=lambda c: (
            c.scores.s_str + c.scores.s_par,  # type: ignore[union-attr]
            c.scores.s_str,  # type: ignore[union-attr]
            c.scores.s_par,  # type: ignore[union-attr]
            c.is_hit,
        ),
    )


@dataclass
class EvolutionConfig:
    max_agent_steps: int = 6
    scoring_mode: str = "rule"  # "rule" | "llm"
    validation_mode: str = "rule"  # "rule" | "llm"
    styles: tuple[StyleTemplate, ...] = DEFAULT_STYLES
    # Optional extra guards on top of the round budget; disabled by default.
    max_wall_seconds: float | None = None
    max_total_tokens: int | None = None


@dataclass
class RoundRecord:
    round_index: int
    chain_id: str
    kind: str  # "seed" | "evolution"
    mutator: str | None
    candidate_ids: list[str]
    winner_id: str | None


@dataclass
class EvolutionResult:
    triggered: list[Chromosome] = field(default_factory=list)
    pool: list[SeedPoolEntry] = field(default_factory=list)
    rounds: list[RoundRecord] = field(default_factory=list)
    executed: list[Chromosome] = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""

    @property
    def evolutionary_rounds(self) -> int:
        return sum(1 for r in self.rounds if r.kind == "evolution")


JournalSink = Callable[[Chromosome, ExecutionEvidence], None]


class PromptEvolver:
    """Owns one target server's evolution run; strictly sequential because
    each round's evidence feeds the next decision."""

    def __init__(
        self,
        session: McpSession,
        gateway: LlmGateway,
        oracle: OracleWatcher | None,
        config: EvolutionConfig | None = None,
        journal_sink: JournalSink | None = None,
        reconnect: Callable[[], McpSession] | None = None,
    ):
        self.session = session
        self.gateway = gateway
        self.oracle = oracle
        self.config = config or EvolutionConfig()
        self.journal_sink = journal_sink
        self.reconnect = reconnect
        self.tools: list[ToolSchema] = []
        self._evidence_by_id: dict[str, ExecutionEvidence] = {}
        self._evidence_seq = 0

    # -- assessment --------------------------------------------------------

    def _score(self, evidence: ExecutionEvidence, context: TaintContext) -> RoundScores:
        if self.config.scoring_mode == "llm":
            return score_round_llm(
                evidence, context.chain, self.gateway, sink_fn=context.sink_fn
            )
        return score_round_rule_based(evidence, context.chain, sink_fn=context.sink_fn)

    def _validate(self, evidence: ExecutionEvidence, context: TaintContext) -> ValidatorVerdict:
        if self.config.validation_mode == "llm":
            return validate_llm(
                evidence, context.chain, self.gateway, sink_fn=context.sink_fn
            )
        return validate_rule_based(evidence, context.chain, sink_fn=context.sink_fn)

    def _execute(self, chromosome: Chromosome, context: TaintContext) -> None:
        evidence = run_agent(
            self.session,
            chromosome.prompt,
            self.gateway,
            self.tools,
            oracle=self.oracle,
            max_steps=self.config.max_agent_steps,
        )
        chromosome.scores = self._score(evidence, context)
        chromosome.verdict = self._validate(evidence, context)
        self._evidence_seq += 1
        chromosome.evidence_ref = f"ev-{self._evidence_seq:04d}"
        self._evidence_by_id[chromosome.evidence_ref] = evidence
        if self.journal_sink is not None:
            self.journal_sink(chromosome, evidence)

    def evidence_for(self, chromosome: Chromosome) -> ExecutionEvidence | None:
        if chromosome.evidence_ref is None:
            return None
        return self._evidence_by_id.get(chromosome.evidence_ref)

    # -- main loop ----------------------------------------------------------

    def run(
        self,
        chains: list[CallChain],
        rounds: int,
        enriched_report: list[EnrichedAlert],
        rng: random.Random | None = None,
    ) -> EvolutionResult:
        if rounds < len(chains):
            raise ValueError(
                f"round budget {rounds} is smaller than the chain count {len(chains)}"
            )
        rng = rng or random.Random(0)
        result = EvolutionResult()
        self.tools = list_tools(self.session)
        contexts = {
            chain.chain_id: build_taint_context(chain, self.tools, enriched_report)
            for chain in chains
        }

        # Seed initialization: every chain gets its four styles executed once.
        round_index = 0
        for chain in chains:
            context = contexts[chain.chain_id]
            candidates = generate_seeds(context, self.gateway, self.config.styles)
            if not self._run_round(result, candidates, context, round_index, "seed", None):
                return result
            round_index += 1

        # Evolutionary loop: rounds - |chains| iterations, with the optional
        # wall-clock and token guards checked between iterations.
        started = time.monotonic()
        for _iteration in range(rounds - len(chains)):
            if self._budget_exhausted(started):
                break
            try:
                entry = schedule_seed(result.pool, rng)
            except SchedulingError:
                logger.warning("seed pool empty, stopping evolution early")
                break
            parent = entry.chromosome
            context = contexts[parent.chain_id]
            parent_evidence = self.evidence_for(parent)
            mutator = schedule_mutator(
                parent, self.gateway, parent_evidence, context.chain.tool_candidate
            )
            mutate = structure_mutate if mutator == STRUCTURE else parameter_mutate
            candidates = mutate(
                parent, context, parent_evidence, self.gateway, round_index,
                self.config.styles,
            )
            if not self._run_round(result, candidates, context, round_index, "evolution", mutator):
                return result
            round_index += 1
        return result

    def _run_round(
        self,
        result: EvolutionResult,
        candidates: list[Chromosome],
        context: TaintContext,
        round_index: int,
        kind: str,
        mutator: str | None,
    ) -> bool:
        """Execute all candidates, collect hits, carry the winner into the
        pool. Returns False when the run must abort (dead session after one
        failed reconnect); the triggered set and journal keep the partial
        results collected so far."""
        for candidate in candidates:
            if not self.session.alive and not self._try_reconnect():
                result.aborted = True
                result.abort_reason = "session died and reconnect failed"
                logger.error(result.abort_reason)
                self._finish_round(result, candidates, context, round_index, kind, mutator)
                return False
            try:
                self._execute(candidate, context)
            except SessionError as exc:
                if not self._try_reconnect():
                    result.aborted = True
                    result.abort_reason = f"session died and reconnect failed: {exc}"
                    logger.error(result.abort_reason)
                    self._finish_round(result, candidates, context, round_index, kind, mutator)
                    return False
                self._execute(candidate, context)
            result.executed.append(candidate)
            if candidate.is_hit:
                result.triggered.append(candidate)
        self._finish_round(result, candidates, context, round_index, kind, mutator)
        return True

    def _finish_round(
        self,
        result: EvolutionResult,
        candidates: list[Chromosome],
        context: TaintContext,
        round_index: int,
        kind: str,
        mutator: str | None,
    ) -> None:
        winner_id: str | None = None
        try:
            winner = select_winner([c for c in candidates if c.scores is not None])
            result.pool.append(SeedPoolEntry(chromosome=winner))
            winner_id = winner.id
        except EmptyRoundError:
            logger.warning(
                "round %d for chain %s produced no scoreable candidates; skipped",
                round_index, context.chain.chain_id,
            )
        result.rounds.append(
            RoundRecord(
                round_index=round_index,
                chain_id=context.chain.chain_id,
                kind=kind,
                mutator=mutator,
                candidate_ids=[c.id for c in candidates],
                winner_id=winner_id,
            )
        )

    def _budget_exhausted(self, started: float) -> bool:
        config = self.config
        if (
            config.max_wall_seconds is not None
            and time.monotonic() - started > config.max_wall_seconds
        ):
            logger.warning("wall-clock budget exhausted, stopping evolution early")
            return True
        if config.max_total_tokens is not None:
            usage = self.gateway.token_usage()
            total = sum(u["input"] + u["output"] for u in usage.values())
            if total > config.max_total_tokens:
                logger.warning("token budget exhausted, stopping evolution early")
                return True
        return False

    def _try_reconnect(self) -> bool:
        if self.reconnect is None:
            return False
        try:
            self.session = self.reconnect()
            self.tools = list_tools(self.session)
            return True
        except SessionError as exc:
            logger.error("reconnect failed: %s", exc)
            return False
