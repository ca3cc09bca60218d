import json

from mcpaudit.anchor.types import VulnClass
from mcpaudit.evolve.chromosome import Chromosome
from mcpaudit.feedback.scoring import RoundScores
from mcpaudit.feedback.validation import TriggerStage, verdict_from_stage
from mcpaudit.report.aggregate import STATUS_OK, aggregate, normalize_prompt
from mcpaudit.report.journal import JournalWriter, read_evidence, read_journal

from builders import chain, evidence, hit, packet

CMDI = VulnClass.COMMAND_INJECTION
SSRF = VulnClass.SSRF


def write_journal(tmp_path, records):
    chains = {c.chain_id: c for c, _, _ in records}
    writer = JournalWriter(tmp_path, list(chains.values()))
    for idx, (chain_obj, stage, prompt) in enumerate(records, 1):
        chromo = Chromosome(
            id=f"{chain_obj.chain_id}/r0/s{idx}",
            prompt=prompt,
            style="minimal_embedding",
            chain_id=chain_obj.chain_id,
            round=0,
            scores=RoundScores(s_str=5, s_par=5),
            verdict=verdict_from_stage(stage, 0.8, "t"),
            evidence_ref=f"ev-{idx:04d}",
        )
        ev = evidence(
            prompt=prompt,
            packets=[packet(chain_obj.tool_candidate, {"x": prompt})],
            hits=[hit(chain_obj.vuln_class, args_preview=prompt)],
        )
        writer.append(chromo, ev)
    writer.close()
    return tmp_path


def test_threshold_is_stage_sink_reached(tmp_path):
    c = chain(chain_id="c1")
    write_journal(
        tmp_path,
        [
            (c, TriggerStage.INTENT_ONLY, "intent prompt"),
            (c, TriggerStage.SINK_REACHED, "sink prompt"),
            (c, TriggerStage.EFFECT_OBSERVED, "effect prompt"),
        ],
    )
    report = aggregate(tmp_path)
    assert report.finding_count() == 2
    stages = {
        f.verdict.stage for f in report.findings[CMDI.value]
    }
    assert stages == {TriggerStage.SINK_REACHED, TriggerStage.EFFECT_OBSERVED}


def test_inclusion_is_independent_of_is_hit(tmp_path):
    # sink_reached has is_hit False yet is included in the report.
    c = chain(chain_id="c1")
    write_journal(tmp_path, [(c, TriggerStage.SINK_REACHED, "prompt one")])
    report = aggregate(tmp_path)
    [finding] = report.findings[CMDI.value]
    assert finding.verdict.is_hit is False


def test_duplicate_prompt_same_chain_same_stage_dedupes(tmp_path):
    c = chain(chain_id="c1")
    write_journal(
        tmp_path,
        [
            (c, TriggerStage.SINK_REACHED, "Same   Prompt"),
            (c, TriggerStage.SINK_REACHED, "same prompt"),
        ],
    )
    report = aggregate(tmp_path)
    assert report.finding_count() == 1


def test_different_stages_not_deduped(tmp_path):
    c = chain(chain_id="c1")
    write_journal(
        tmp_path,
        [
            (c, TriggerStage.SINK_REACHED, "same prompt"),
            (c, TriggerStage.EFFECT_OBSERVED, "same prompt"),
        ],
    )
    assert aggregate(tmp_path).finding_count() == 2


def test_dedup_is_per_chain(tmp_path):
    records = [
        (chain(chain_id="c1"), TriggerStage.SINK_REACHED, "same prompt"),
        (chain(chain_id="c2"), TriggerStage.SINK_REACHED, "same prompt"),
    ]
    assert aggregate(write_journal(tmp_path, records)).finding_count() == 2


def test_mixed_categories_grouped(tmp_path):
    records = [
        (chain(chain_id="c1", vuln=CMDI), TriggerStage.EFFECT_OBSERVED, "cmdi prompt"),
        (
            chain(chain_id="c2", vuln=SSRF, tool="fetch_resource"),
            TriggerStage.SINK_REACHED,
            "ssrf prompt",
        ),
    ]
    report = aggregate(write_journal(tmp_path, records))
    assert len(report.findings[CMDI.value]) == 1
    assert len(report.findings[SSRF.value]) == 1
    assert report.findings[VulnClass.PATH_INJECTION.value] == []


def test_findings_carry_oracle_evidence_and_chain(tmp_path):
    c = chain(chain_id="c1")
    write_journal(tmp_path, [(c, TriggerStage.SINK_REACHED, "evidence prompt")])
    report = aggregate(tmp_path)
    [finding] = report.findings[CMDI.value]
    assert finding.chain == c
    assert len(finding.oracle_evidence) == 1
    assert finding.oracle_evidence[0].args_preview == "evidence prompt"


def test_replay_from_journal_is_byte_identical(tmp_path):
    c = chain(chain_id="c1")
    write_journal(
        tmp_path,
        [
            (c, TriggerStage.SINK_REACHED, "p1"),
            (c, TriggerStage.EFFECT_OBSERVED, "p2"),
        ],
    )
    first = aggregate(tmp_path, status=STATUS_OK).to_json()
    second = aggregate(tmp_path, status=STATUS_OK).to_json()
    assert first == second
    # Report bytes contain no volatile timestamps.
    assert '"ts"' not in first


def test_report_key_order_is_stable(tmp_path):
    c = chain(chain_id="c1")
    write_journal(tmp_path, [(c, TriggerStage.SINK_REACHED, "p1")])
    doc = json.loads(aggregate(tmp_path).to_json())
    assert list(doc) == ["schema_version", "status", "findings", "chains", "metrics"]
    assert list(doc["findings"]) == ["command_injection", "ssrf", "path_injection"]


def test_normalize_prompt_collapses_whitespace_and_case():
    assert normalize_prompt("  A   b\nC ") == "a b c"


def test_journal_round_trip(tmp_path):
    c = chain(chain_id="c1")
    write_journal(tmp_path, [(c, TriggerStage.SINK_REACHED, "round trip")])
    [record] = list(read_journal(tmp_path))
    assert record.chain == c
    assert record.chromosome.prompt == "round trip"
    evidence_map = read_evidence(tmp_path)
    assert record.chromosome.evidence_ref in evidence_map
    assert evidence_map[record.chromosome.evidence_ref].prompt == "round trip"
