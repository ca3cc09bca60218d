import random

from hypothesis import given, settings, strategies as st

from mcpaudit.anchor.inventory import (
    containment_lookup,
    inventory_sort_key,
    scan_function_inventory,
)
from mcpaudit.anchor.types import FunctionRecord, SourceLocation, is_placeholder_name

from builders import func, loc


def brute_force_min_span(location, records):
    """Independent oracle: exhaustive scan selecting the minimal-span
    enclosure, ties by (file, start_line) like the inventory ordering."""
    enclosing = [r for r in records if r.encloses(location)]
    if not enclosing:
        return None
    return min(enclosing, key=lambda r: (r.span, r.file, r.start_line))


def test_nested_python_functions_ordered_by_span(tmp_path):
    src = tmp_path / "mod.py"
    src.write_text(
        "def outer(a):\n"
        + "    x = a\n"
        + "    def inner(b):\n"
        + "        return b\n"
        + "    return inner(x)\n"
        + "\n" * 95
        + "# tail\n"
    )
    inventory = scan_function_inventory(tmp_path)
    names = [r.qualified_name for r in inventory]
    assert names == ["outer.inner", "outer"]
    assert inventory[0].span < inventory[1].span


def test_empty_directory_empty_inventory(tmp_path):
    assert scan_function_inventory(tmp_path) == []


def test_anonymous_callback_flagged_as_placeholder(tmp_path):
    (tmp_path / "handlers.js").write_text(
        "function register(server) {\n"
        "  server.on('call', function (req) {\n"
        "    return req;\n"
        "  });\n"
        "}\n"
        "function shutdown() {\n"
        "  return 0;\n"
        "}\n"
    )
    inventory = scan_function_inventory(tmp_path)
    names = sorted(r.qualified_name for r in inventory)
    assert names == ["<anonymous>", "register", "shutdown"]
    placeholders = [r for r in inventory if is_placeholder_name(r.qualified_name)]
    assert len(placeholders) == 1


def test_python_lambda_is_placeholder(tmp_path):
    (tmp_path / "m.py").write_text("square = lambda v: v * v\n\n\ndef named(v):\n    return v\n")
    inventory = scan_function_inventory(tmp_path)
    assert sum(is_placeholder_name(r.qualified_name) for r in inventory) == 1


def test_js_class_methods_qualified(tmp_path):
    (tmp_path / "svc.ts").write_text(
        "export class FileService {\n"
        "  readFile(path: string) {\n"
        "    return path;\n"
        "  }\n"
        "}\n"
        "const helper = (x) => {\n"
        "  return x;\n"
        "};\n"
    )
    inventory = scan_function_inventory(tmp_path)
    names = {r.qualified_name for r in inventory}
    assert "FileService.readFile" in names
    assert "helper" in names


def test_containment_picks_tightest_scope():
    inventory = sorted(
        [func("a.py", "A", 1, 100), func("a.py", "B", 10, 20)], key=inventory_sort_key
    )
    found = containment_lookup(loc("a.py", 15), inventory)
    assert found is not None and found.qualified_name == "B"


def test_containment_no_enclosure_returns_none():
    inventory = sorted([func("a.py", "A", 1, 100)], key=inventory_sort_key)
    assert containment_lookup(loc("a.py", 200), inventory) is None


def test_containment_boundary_inclusive():
    inventory = sorted(
        [func("a.py", "A", 1, 100), func("a.py", "B", 10, 20)], key=inventory_sort_key
    )
    at_start = containment_lookup(loc("a.py", 10), inventory)
    at_end = containment_lookup(loc("a.py", 20), inventory)
    assert at_start is not None and at_start.qualified_name == "B"
    assert at_end is not None and at_end.qualified_name == "B"


def test_containment_requires_same_file():
    inventory = sorted([func("a.py", "A", 1, 100)], key=inventory_sort_key)
    assert containment_lookup(loc("b.py", 15), inventory) is None


def test_shuffled_then_resorted_inventory_gives_identical_anchors():
    records = [
        func("a.py", "A", 1, 100),
        func("a.py", "B", 10, 40),
        func("a.py", "C", 12, 20),
        func("b.py", "D", 1, 50),
    ]
    baseline = sorted(records, key=inventory_sort_key)
    queries = [loc("a.py", line) for line in (1, 10, 12, 20, 40, 99)] + [loc("b.py", 3)]
    expected = [containment_lookup(q, baseline) for q in queries]
    rng = random.Random(7)
    for _ in range(10):
        shuffled = records[:]
        rng.shuffle(shuffled)
        resorted = sorted(shuffled, key=inventory_sort_key)
        assert [containment_lookup(q, resorted) for q in queries] == expected


@st.composite
def inventory_and_query(draw):
    n_funcs = draw(st.integers(1, 8))
    records = []
    for i in range(n_funcs):
        start = draw(st.integers(1, 60))
        end = start + draw(st.integers(0, 40))
        records.append(
            FunctionRecord(
                file=draw(st.sampled_from(["a.py", "b.py"])),
                qualified_name=f"f{i}",
                start_line=start,
                end_line=end,
            )
        )
    query = SourceLocation(
        file=draw(st.sampled_from(["a.py", "b.py"])),
        start_line=draw(st.integers(1, 110)),
        end_line=draw(st.integers(111, 120)),
    )
    return records, query


@given(inventory_and_query())
@settings(max_examples=200)
def test_containment_matches_brute_force_oracle(case):
    records, query = case
    inventory = sorted(records, key=inventory_sort_key)
    got = containment_lookup(query, inventory)
    expected = brute_force_min_span(query, records)
    if expected is None:
        assert got is None
    else:
        assert got is not None
        assert (got.span, got.file, got.start_line) == (
            expected.span, expected.file, expected.start_line,
        )


@given(inventory_and_query())
@settings(max_examples=100)
def test_anchor_always_encloses_source_line(case):
    records, query = case
    inventory = sorted(records, key=inventory_sort_key)
    got = containment_lookup(query, inventory)
    if got is not None:
        assert got.file == query.file
        assert got.start_line <= query.start_line <= got.end_line
