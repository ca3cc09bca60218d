import pytest
from hypothesis import given, strategies as st

from mcpaudit.anchor.flows import load_flow_table, match_flow, matching_flows
from mcpaudit.anchor.types import VulnClass

from builders import alert, flow, loc


CMDI = VulnClass.COMMAND_INJECTION


def make_alert(sink_line: int = 42):
    return alert(
        vuln=CMDI, source=loc("srv/index.js", 12), sink=loc("srv/index.js", sink_line)
    )


def test_match_within_one_line():
    flows = [flow(CMDI, "srv/index.js", 43)]
    assert match_flow(make_alert(42), flows) is flows[0]


def test_no_match_at_distance_two():
    flows = [flow(CMDI, "srv/index.js", 44)]
    assert match_flow(make_alert(42), flows) is None


def test_equidistant_tie_resolves_by_table_order():
    flows = [
        flow(CMDI, "srv/index.js", 43, source_fn="late"),
        flow(CMDI, "srv/index.js", 41, source_fn="early"),
    ]
    chosen = match_flow(make_alert(42), flows)
    assert chosen is flows[0]
    # Reversing the table flips the winner: order is the only tiebreaker.
    chosen = match_flow(make_alert(42), list(reversed(flows)))
    assert chosen.source_fn == "early"


def test_exact_match_beats_off_by_one():
    flows = [
        flow(CMDI, "srv/index.js", 43, source_fn="near"),
        flow(CMDI, "srv/index.js", 42, source_fn="exact"),
    ]
    assert match_flow(make_alert(42), flows).source_fn == "exact"


def test_class_and_file_must_agree():
    flows = [
        flow(VulnClass.SSRF, "srv/index.js", 42),
        flow(CMDI, "srv/other.js", 42),
    ]
    assert match_flow(make_alert(42), flows) is None


@pytest.mark.parametrize("offset,matches", [(-2, False), (-1, True), (0, True), (1, True), (2, False)])
def test_tolerance_window_is_exactly_one_line(offset, matches):
    flows = [flow(CMDI, "srv/index.js", 42 + offset)]
    assert (match_flow(make_alert(42), flows) is not None) is matches


@given(st.integers(2, 10_000), st.integers(-1, 1))
def test_tolerance_symmetry(sink_line, offset):
    # Match at +d iff match at -d for mirrored fixtures.
    plus = [flow(CMDI, "f.js", sink_line + offset)]
    minus = [flow(CMDI, "f.js", sink_line - offset)]
    a = make_alert(sink_line)
    a = alert(vuln=CMDI, source=loc("f.js", 1), sink=loc("f.js", sink_line))
    assert (match_flow(a, plus) is None) == (match_flow(a, minus) is None)


def test_matching_flows_orders_by_distance_then_table():
    flows = [
        flow(CMDI, "f.js", 43, source_fn="b"),
        flow(CMDI, "f.js", 42, source_fn="a"),
        flow(CMDI, "f.js", 41, source_fn="c"),
    ]
    a = alert(vuln=CMDI, source=loc("f.js", 1), sink=loc("f.js", 42))
    assert [f.source_fn for f in matching_flows(a, flows)] == ["a", "b", "c"]


def test_flow_table_sidecar_roundtrip(tmp_path):
    sidecar = tmp_path / "flows.tsv"
    sidecar.write_text(
        "# category\tsrc_file\tsrc_line\tsink_file\tsink_line\tsrc_fn\tsink_fn\n"
        "command_injection\tsrv/index.js\t12\tsrv/index.js\t30\twriteFile\trunCmd\n"
        "ssrf\tapp.py\t4\tapp.py\t9\tfetchUrl\tdoGet\n"
        "bogus line without tabs\n"
    )
    records = load_flow_table(sidecar)
    assert len(records) == 2
    assert records[0].category is CMDI
    assert records[0].source_fn == "writeFile"
    assert records[1].sink_loc.start_line == 9
