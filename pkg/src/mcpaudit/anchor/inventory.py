"""Function-definition inventory and tightest-enclosure containment lookup.

Python files are parsed with `ast` (exact ranges, qualified names through
classes and nesting). JS/TS files are scanned with a line-level heuristic:
a definition header's body is delimited by balanced braces. Good enough for
anchor containment at fixture scale; documented as best effort on real repos.
"""
from __future__ import annotations

import ast
import logging
import re
from pathlib import Path

from .types import FunctionRecord, SourceLocation

logger = logging.getLogger(__name__)

PY_EXTENSIONS = {".py"}
JS_EXTENSIONS = {".js", ".jsx", ".ts", ".tsx", ".mjs", ".cjs"}

SKIP_DIRS = {"node_modules", ".git", "__pycache__", "dist", "build", ".venv", "venv"}


def inventory_sort_key(rec: FunctionRecord) -> tuple[int, str, int]:
    # Ascending span so the first enclosure found is the tightest scope.
    return (rec.span, rec.file, rec.start_line)


def scan_function_inventory(source_root: str | Path) -> list[FunctionRecord]:
    """Collect every function definition under `source_root`.

    Returns records sorted ascending by span (ties by file, then start line);
    unreadable or unparseable files are skipped with a diagnostic.
    """
    root = Path(source_root)
    records: list[FunctionRecord] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        if any(part in SKIP_DIRS for part in path.parts):
            continue
        suffix = path.suffix.lower()
        if suffix not in PY_EXTENSIONS and suffix not in JS_EXTENSIONS:
            continue
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            logger.warning("skipping unreadable file %s: %s", rel, exc)
            continue
        try:
            if suffix in PY_EXTENSIONS:
                records.extend(_scan_python(rel, text))
            else:
                records.extend(_scan_js(rel, text))
        except SyntaxError as exc:
            logger.warning("skipping unparseable file %s: %s", rel, exc)
    records.sort(key=inventory_sort_key)
    return records


def containment_lookup(
    loc: SourceLocation, inventory: list[FunctionRecord]
) -> FunctionRecord | None:
    """Smallest function whose line range encloses `loc` (inventory pre-sorted)."""
    for rec in inventory:
        if rec.encloses(loc):
            return rec
    return None


# -- Python ------------------------------------------------------------------


def _scan_python(rel_file: str, text: str) -> list[FunctionRecord]:
    tree = ast.parse(text)
    records: list[FunctionRecord] = []

    def visit(node: ast.AST, scope: tuple[str, ...]) -> None:
        for child in ast.iter_child_nodes(node):
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
                qual = ".".join(scope + (child.name,))
                records.append(
                    FunctionRecord(rel_file, qual, child.lineno, child.end_lineno or child.lineno)
                )
                visit(child, scope + (child.name,))
            elif isinstance(child, ast.Lambda):
                qual = ".".join(scope + ("<lambda>",)) if scope else "<lambda>"
                records.append(
                    FunctionRecord(rel_file, qual, child.lineno, child.end_lineno or child.lineno)
                )
            elif isinstance(child, ast.ClassDef):
                visit(child, scope + (child.name,))
            else:
                visit(child, scope)

    visit(tree, ())
    return records


# -- JS/TS (heuristic) -------------------------------------------------------

_JS_FUNC = re.compile(
    r"(?:^|[\s(,=:])(?:export\s+)?(?:default\s+)?(?:async\s+)?function\s*\*?\s*"
    r"(?P<name>[A-Za-z_$][\w$]*)?\s*\("
)
_JS_ARROW = re.compile(
    r"(?:^|\s)(?:export\s+)?(?:const|let|var)\s+(?P<name>[A-Za-z_$][\w$]*)\s*"
    r"(?::[^=]+)?=\s*(?:async\s*)?(?:\([^()]*\)|[A-Za-z_$][\w$]*)\s*=>"
)
_JS_METHOD = re.compile(
    r"^\s*(?:public\s+|private\s+|protected\s+|static\s+|async\s+|override\s+)*"
    r"(?P<name>[A-Za-z_$][\w$]*)\s*\([^;{}]*\)\s*(?::[^{;]+)?\{"
)
_JS_CLASS = re.compile(r"(?:^|\s)class\s+(?P<name>[A-Za-z_$][\w$]*)")
_JS_KEYWORDS = {
    "if", "for", "while", "switch", "catch", "return", "function", "else",
    "do", "new", "typeof", "await", "constructor",
}


def _strip_js_noise(line: str) -> str:
    # Blank out string/template contents and line comments so brace counting
    # and identifier matching are not confused at fixture scale.
    out: list[str] = []
    quote: str | None = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\":
                i += 2
                out.append("  ")
                continue
            if ch == quote:
                quote = None
            out.append(" ")
            i += 1
            continue
        if ch in "'\"`":
            quote = ch
            out.append(" ")
            i += 1
            continue
        if ch == "/" and i + 1 < len(line) and line[i + 1] == "/":
            break
        out.append(ch)
        i += 1
    return "".join(out)


def _match_braces(lines: list[str], start_idx: int, col: int) -> int:
    """Line index of the brace that balances the one at (start_idx, col)."""
    depth = 0
    for idx in range(start_idx, len(lines)):
        stripped = _strip_js_noise(lines[idx])
        seg = stripped[col:] if idx == start_idx else stripped
        for ch in seg:
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return idx
    return len(lines) - 1


def _scan_js(rel_file: str, text: str) -> list[FunctionRecord]:
    lines = text.splitlines()
    stripped = [_strip_js_noise(l) for l in lines]

    class_ranges: list[tuple[str, int, int]] = []
    for idx, line in enumerate(stripped):
        m = _JS_CLASS.search(line)
        if m:
            brace = line.find("{", m.end())
            col = brace if brace >= 0 else len(line)
            end = _match_braces(stripped, idx, col if brace >= 0 else 0)
            class_ranges.append((m.group("name"), idx + 1, end + 1))

    def enclosing_class(lineno: int) -> str | None:
        best: tuple[int, str] | None = None
        for name, start, end in class_ranges:
            if start <= lineno <= end:
                span = end - start
                if best is None or span < best[0]:
                    best = (span, name)
        return best[1] if best else None

    records: list[FunctionRecord] = []
    seen_spans: set[tuple[int, int, str]] = set()

    def add(name: str, header_idx: int, brace_col: int) -> None:
        end_idx = _match_braces(stripped, header_idx, brace_col)
        key = (header_idx + 1, end_idx + 1, name)
        if key in seen_spans:
            return
        seen_spans.add(key)
        cls = enclosing_class(header_idx + 1)
        qual = f"{cls}.{name}" if cls and cls != name else name
        records.append(FunctionRecord(rel_file, qual, header_idx + 1, end_idx + 1))

    for idx, line in enumerate(stripped):
        for m in _JS_FUNC.finditer(line):
            name = m.group("name") or "<anonymous>"
            brace = line.find("{", m.end())
            add(name, idx, brace if brace >= 0 else len(line) - 1)
        m = _JS_ARROW.search(line)
        if m:
            brace = line.find("{", m.end())
            if brace >= 0:
                add(m.group("name"), idx, brace)
            else:
                # Expression-bodied arrow: single line.
                records.append(
                    FunctionRecord(rel_file, m.group("name"), idx + 1, idx + 1)
                )
        m = _JS_METHOD.match(line)
        if m and m.group("name") not in _JS_KEYWORDS:
            if enclosing_class(idx + 1):
                add(m.group("name"), idx, line.find("{"))

    return records
