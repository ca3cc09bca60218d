"""Winner selection and the Algorithm-1 loop semantics, driven by the mock
server plus a fully scripted gateway."""
import json
import random

import pytest

from mcpaudit.anchor.types import EnrichedAlert, VulnClass
from mcpaudit.evolve.chromosome import Chromosome
from mcpaudit.evolve.loop import (
    EmptyRoundError,
    EvolutionConfig,
    PromptEvolver,
    select_winner,
)
from mcpaudit.feedback.scoring import RoundScores
from mcpaudit.feedback.validation import TriggerStage, verdict_from_stage
from mcpaudit.harness.oracle import OracleWatcher
from mcpaudit.harness.session import connect
from mcpaudit.llm.gateway import LlmGateway, ScriptedProvider

from builders import alert, chain, loc, mock_server_cmd

CMDI = VulnClass.COMMAND_INJECTION


def candidate(
    idx: int, s_str: float, s_par: float, is_hit: bool = False, style: str = "s"
) -> Chromosome:
    c = Chromosome(
        id=f"c1/r0/cand{idx}",
        prompt=f"prompt {idx}",
        style=style,
        chain_id="c1",
        round=0,
        scores=RoundScores(s_str=s_str, s_par=s_par),
    )
    stage = TriggerStage.EFFECT_OBSERVED if is_hit else TriggerStage.NOT_TRIGGERED
    c.verdict = verdict_from_stage(stage, 0.9, "t")
    return c


def test_g_tie_breaks_by_structure_score():
    cands = [
        candidate(0, 8, 4),   # G=12
        candidate(1, 4, 5),   # G=9
        candidate(2, 9, 5),   # G=14, s_str 9
        candidate(3, 7, 7),   # G=14, s_str 7
    ]
    assert select_winner(cands) is cands[2]


def test_full_tie_resolved_by_trigger_label():
    cands = [candidate(i, 5, 5) for i in range(4)]
    cands[2].verdict = verdict_from_stage(TriggerStage.EFFECT_OBSERVED, 0.9, "hit")
    assert select_winner(cands) is cands[2]


def test_single_candidate_wins():
    only = candidate(0, 1, 1)
    assert select_winner([only]) is only


def test_residual_tie_keeps_lowest_index():
    cands = [candidate(i, 5, 5) for i in range(4)]
    assert select_winner(cands) is cands[0]


def test_empty_candidate_set_is_round_error():
    with pytest.raises(EmptyRoundError):
        select_winner([])


# -- loop semantics -------------------------------------------------------------


def enriched_for_chain(c):
    a = alert(
        vuln=c.vuln_class,
        source=loc(c.file, c.source_line),
        sink=loc(c.file, c.source_line + 2),
        alert_id=c.chain_id.split("#")[0],
    )
    return EnrichedAlert(
        alert=a,
        anchor_function=None,
        tool_candidates=[c.tool_candidate],
        anchored_flow_confirmed=True,
        source_functions=[c.tool_candidate],
        sink_function=c.tool_candidate,
    )


def fenced(text: str) -> str:
    return f"```text\n{text}\n```"


def base_script() -> list[dict]:
    """Pattern-driven script: seeds call the tool benignly; mutants carry the
    marker payload; tool results end the agent turn."""
    return [
        {"role": "surrogate_agent", "match": "^\\[tool ", "response": "Round finished."},
        {
            "role": "surrogate_agent",
            "match": "LOOPMARK77",
            "response": "",
            "tool_calls": [
                {"tool": "run_diagnostics", "args": {"target": "host1; echo LOOPMARK77"}}
            ],
        },
        {
            "role": "surrogate_agent",
            "match": "(?s).",
            "response": "",
            "tool_calls": [{"tool": "run_diagnostics", "args": {"target": "host1.local"}}],
        },
        {
            "role": "prompt_generator",
            "match": "(?s).",
            "response": fenced("Use run_diagnostics on host1.local and report."),
        },
        {"role": "mutation_scheduler", "match": "(?s).", "response": "<PARAMETER MUTATOR>"},
        {
            "role": "parameter_mutator",
            "match": "(?s).",
            "response": "<NEWPROMPT> Use run_diagnostics with target \"host1; echo LOOPMARK77\". </NEWPROMPT>",
        },
    ]


@pytest.fixture
def evolver_factory(tmp_path):
    sessions = []

    def build(script=None, profile="cmdi"):
        oracle_path = tmp_path / "oracle.jsonl"
        oracle_path.touch()
        session = connect(mock_server_cmd(profile), oracle_out=oracle_path)
        sessions.append(session)
        gateway = LlmGateway(ScriptedProvider(script or base_script()))
        return PromptEvolver(
            session=session,
            gateway=gateway,
            oracle=OracleWatcher(oracle_path),
            config=EvolutionConfig(),
        )

    yield build
    for session in sessions:
        session.close()


def cmdi_chain(chain_id="mini-0001#0"):
    return chain(tool="run_diagnostics", vuln=CMDI, chain_id=chain_id, file="server_main.py", line=7)


def test_seed_round_hit_enters_triggered_set(evolver_factory):
    evolver = evolver_factory()
    c = cmdi_chain()
    result = evolver.run([c], rounds=1, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    # Seeds reach sink_reached (no payload), not a hit; pool gains 1 entry.
    assert result.rounds[0].kind == "seed"
    assert len(result.pool) == 1
    assert result.evolutionary_rounds == 0


def test_budget_semantics_zero_evolution_rounds(evolver_factory):
    evolver = evolver_factory()
    chains = [cmdi_chain("a#0"), cmdi_chain("b#0")]
    enriched = [enriched_for_chain(c) for c in chains]
    result = evolver.run(chains, rounds=2, enriched_report=enriched, rng=random.Random(0))
    assert len(result.rounds) == 2
    assert result.evolutionary_rounds == 0
    assert len(result.pool) == 2


def test_budget_semantics_r5_gives_three_evolution_rounds(evolver_factory):
    evolver = evolver_factory()
    chains = [cmdi_chain("a#0"), cmdi_chain("b#0")]
    enriched = [enriched_for_chain(c) for c in chains]
    result = evolver.run(chains, rounds=5, enriched_report=enriched, rng=random.Random(0))
    assert len(result.rounds) == 5
    assert result.evolutionary_rounds == 3
    # Winner-carry-forward: pool grows by one per seed chain and per iteration.
    assert len(result.pool) == 5


def test_budget_below_chain_count_rejected(evolver_factory):
    evolver = evolver_factory()
    chains = [cmdi_chain("a#0"), cmdi_chain("b#0")]
    with pytest.raises(ValueError):
        evolver.run(chains, rounds=1, enriched_report=[], rng=random.Random(0))


def test_marker_payload_reaches_effect_and_triggered_set(evolver_factory):
    evolver = evolver_factory()
    c = cmdi_chain()
    result = evolver.run([c], rounds=3, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    assert result.evolutionary_rounds == 2
    assert result.triggered, "mutated candidates must reach the triggered set"
    stages = {t.verdict.stage for t in result.triggered}
    assert TriggerStage.EFFECT_OBSERVED in stages
    assert all(t.is_hit for t in result.triggered)


def test_every_candidate_executes_before_selection(evolver_factory):
    evolver = evolver_factory()
    c = cmdi_chain()
    result = evolver.run([c], rounds=2, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    for round_record in result.rounds:
        assert len(round_record.candidate_ids) == 4
        executed_ids = {ch.id for ch in result.executed}
        assert set(round_record.candidate_ids) <= executed_ids


def test_lineage_terminates_at_round_zero_seed(evolver_factory):
    evolver = evolver_factory()
    c = cmdi_chain()
    result = evolver.run([c], rounds=4, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    by_id = {ch.id: ch for ch in result.executed}
    for ch in result.executed:
        node = ch
        depth = 0
        while node.parent_id is not None:
            assert node.chain_id == ch.chain_id
            node = by_id[node.parent_id]
            depth += 1
            assert depth < 50
        assert node.round == 0


def test_fixed_script_and_seed_reproduce_bit_identical_runs(evolver_factory):
    def run_once():
        evolver = evolver_factory()
        c = cmdi_chain()
        result = evolver.run([c], rounds=3, enriched_report=[enriched_for_chain(c)],
                             rng=random.Random(42))
        return json.dumps(
            {
                "triggered": [t.to_dict() for t in result.triggered],
                "pool": [e.chromosome.to_dict() for e in result.pool],
            },
            sort_keys=True,
        )

    assert run_once() == run_once()


def test_dead_session_without_reconnect_aborts_with_partial_results(evolver_factory):
    evolver = evolver_factory()
    c = cmdi_chain()
    kill_after = {"count": 0}

    def killer(chromosome, evidence):
        kill_after["count"] += 1
        if kill_after["count"] == 4:  # end of the seed round
            evolver.session.process.kill()
            evolver.session.process.wait()

    evolver.journal_sink = killer
    result = evolver.run([c], rounds=4, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    assert result.aborted
    assert "reconnect failed" in result.abort_reason
    assert len(result.rounds) < 4  # partial run surfaced, not silently completed
    assert len(result.executed) >= 4  # the seed round's results are retained


def test_dead_session_recovers_through_reconnect(evolver_factory, tmp_path):
    evolver = evolver_factory()
    c = cmdi_chain()
    oracle_path = tmp_path / "oracle.jsonl"

    def rebuild():
        session = connect(mock_server_cmd("cmdi"), oracle_out=oracle_path)
        return session

    evolver.reconnect = rebuild
    kill_after = {"count": 0}

    def killer(chromosome, evidence):
        kill_after["count"] += 1
        if kill_after["count"] == 4:
            evolver.session.process.kill()
            evolver.session.process.wait()

    evolver.journal_sink = killer
    result = evolver.run([c], rounds=3, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    assert not result.aborted
    assert len(result.rounds) == 3
    evolver.session.close()


def test_token_budget_guard_stops_evolution_early(evolver_factory):
    from mcpaudit.evolve.loop import EvolutionConfig

    evolver = evolver_factory()
    evolver.config = EvolutionConfig(max_total_tokens=1)  # exhausted after seeding
    c = cmdi_chain()
    result = evolver.run([c], rounds=5, enriched_report=[enriched_for_chain(c)],
                         rng=random.Random(0))
    assert len(result.rounds) == 1  # seed round only
    assert result.evolutionary_rounds == 0
