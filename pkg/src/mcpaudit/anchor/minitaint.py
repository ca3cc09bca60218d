"""Built-in intraprocedural taint pass so demos and tests need no external
analyzer. Handler parameters are sources; a flow is flagged when a parameter
reaches a registry sink through assignment chains and string concatenation or
interpolation inside one function. Each alert carries a matching FlowRecord
so anchored confirmation succeeds on built-in runs.
"""
from __future__ import annotations

import ast
import logging
import re
from pathlib import Path
from typing import TYPE_CHECKING

from .inventory import JS_EXTENSIONS, PY_EXTENSIONS, SKIP_DIRS, _strip_js_noise
from .types import FlowRecord, SourceLocation, TaintAlert, VulnClass

if TYPE_CHECKING:
    from ..sinks import SinkRegistry

logger = logging.getLogger(__name__)


def run_mini_taint(
    source_root: str | Path, registry: "SinkRegistry"
) -> tuple[list[TaintAlert], list[FlowRecord]]:
    root = Path(source_root)
    alerts: list[TaintAlert] = []
    flows: list[FlowRecord] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or any(part in SKIP_DIRS for part in path.parts):
            continue
        suffix = path.suffix.lower()
        if suffix not in PY_EXTENSIONS and suffix not in JS_EXTENSIONS:
            continue
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            logger.warning("mini-taint: skipping unreadable %s: %s", rel, exc)
            continue
        try:
            if suffix in PY_EXTENSIONS:
                _analyze_python(rel, text, registry, alerts, flows)
            else:
                _analyze_js(rel, text, registry, alerts, flows)
        except SyntaxError as exc:
            logger.warning("mini-taint: skipping unparseable %s: %s", rel, exc)
    return alerts, flows


def _record(
    rel: str,
    qual: str,
    vuln_class: VulnClass,
    source_line: int,
    sink_line: int,
    alerts: list[TaintAlert],
    flows: list[FlowRecord],
) -> None:
    ordinal = len(alerts) + 1
    source_loc = SourceLocation.line(rel, source_line)
    sink_loc = SourceLocation.line(rel, sink_line)
    alerts.append(
        TaintAlert(
            alert_id=f"mini-{ordinal:04d}",
            vuln_class=vuln_class,
            source_loc=source_loc,
            sink_loc=sink_loc,
            path_steps=(source_loc, sink_loc),
            rule_id=f"mini/{vuln_class.value}",
        )
    )
    flows.append(
        FlowRecord(
            category=vuln_class,
            source_loc=source_loc,
            sink_loc=sink_loc,
            source_fn=qual,
            sink_fn=qual,
        )
    )


# -- Python ------------------------------------------------------------------


def _py_import_aliases(tree: ast.Module) -> dict[str, str]:
    aliases: dict[str, str] = {}
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for name in node.names:
                if name.asname:
                    aliases[name.asname] = name.name
                # Plain `import a.b` binds `a`, which already resolves
                # naturally through the attribute chain.
        elif isinstance(node, ast.ImportFrom) and node.module:
            for name in node.names:
                aliases[name.asname or name.name] = f"{node.module}.{name.name}"
    return aliases


def _dotted_name(expr: ast.expr, aliases: dict[str, str]) -> str | None:
    parts: list[str] = []
    node = expr
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if not isinstance(node, ast.Name):
        return None
    parts.append(node.id)
    parts.reverse()
    head = aliases.get(parts[0], parts[0])
    return ".".join([head] + parts[1:])


class _TaintChecker:
    """Taint predicate over expressions. Propagation is limited to direct
    name copies, `+`/`%` string building, f-strings, and tainted elements in
    tuple/list literals; function application does not propagate."""

    def __init__(self, tainted: set[str]):
        self.tainted = tainted

    def check(self, expr: ast.expr) -> bool:
        if isinstance(expr, ast.Name):
            return expr.id in self.tainted
        if isinstance(expr, ast.BinOp) and isinstance(expr.op, (ast.Add, ast.Mod)):
            return self.check(expr.left) or self.check(expr.right)
        if isinstance(expr, ast.JoinedStr):
            return any(
                self.check(v.value)
                for v in expr.values
                if isinstance(v, ast.FormattedValue)
            )
        if isinstance(expr, (ast.Tuple, ast.List)):
            return any(self.check(e) for e in expr.elts)
        return False


def _analyze_python(
    rel: str,
    text: str,
    registry: "SinkRegistry",
    alerts: list[TaintAlert],
    flows: list[FlowRecord],
) -> None:
    tree = ast.parse(text)
    aliases = _py_import_aliases(tree)

    def analyze_fn(fn: ast.FunctionDef | ast.AsyncFunctionDef, scope: tuple[str, ...]) -> None:
        qual = ".".join(scope + (fn.name,))
        args = fn.args
        params = [
            a.arg
            for a in (args.posonlyargs + args.args + args.kwonlyargs)
            if a.arg not in ("self", "cls")
        ]
        if fn.args.vararg:
            params.append(fn.args.vararg.arg)
        if not params:
            return
        param_lines = {
            a.arg: a.lineno
            for a in (args.posonlyargs + args.args + args.kwonlyargs)
        }
        checker = _TaintChecker(set(params))

        def handle_statement(stmt: ast.stmt) -> None:
            if isinstance(stmt, ast.Assign):
                is_tainted = checker.check(stmt.value)
                for target in stmt.targets:
                    if isinstance(target, ast.Name):
                        if is_tainted:
                            checker.tainted.add(target.id)
                        else:
                            checker.tainted.discard(target.id)
            elif isinstance(stmt, ast.AugAssign) and isinstance(stmt.target, ast.Name):
                if checker.check(stmt.value):
                    checker.tainted.add(stmt.target.id)
            elif isinstance(stmt, ast.AnnAssign) and isinstance(stmt.target, ast.Name):
                if stmt.value is not None and checker.check(stmt.value):
                    checker.tainted.add(stmt.target.id)
            for call in _calls_in(stmt):
                dotted = _dotted_name(call.func, aliases)
                if dotted is None:
                    continue
                for spec in registry.match_py(dotted):
                    for pos in spec.sink_arg_positions:
                        if pos < len(call.args) and checker.check(call.args[pos]):
                            first_param = next(iter(params))
                            source_line = param_lines.get(first_param, fn.lineno)
                            _record(
                                rel, qual, spec.vuln_class, source_line,
                                call.lineno, alerts, flows,
                            )
                            break
                    else:
                        continue
                    break

        for stmt in _statements_in_order(fn):
            handle_statement(stmt)

    def walk_scope(node: ast.AST, scope: tuple[str, ...]) -> None:
        for child in ast.iter_child_nodes(node):
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
                analyze_fn(child, scope)
                walk_scope(child, scope + (child.name,))
            elif isinstance(child, ast.ClassDef):
                walk_scope(child, scope + (child.name,))
            else:
                walk_scope(child, scope)

    walk_scope(tree, ())


def _statements_in_order(fn: ast.FunctionDef | ast.AsyncFunctionDef) -> list[ast.stmt]:
    out: list[ast.stmt] = []

    def collect(body: list[ast.stmt]) -> None:
        for stmt in body:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                continue  # nested definitions are analyzed separately
            out.append(stmt)
            for attr in ("body", "orelse", "finalbody"):
                inner = getattr(stmt, attr, None)
                if inner:
                    collect(inner)
            for handler in getattr(stmt, "handlers", []) or []:
                collect(handler.body)

    collect(fn.body)
    return out


def _calls_in(stmt: ast.stmt) -> list[ast.Call]:
    return [node for node in ast.walk(stmt) if isinstance(node, ast.Call)]


# -- JS/TS (heuristic) -------------------------------------------------------

_JS_HEADER = re.compile(
    r"(?:function\s*\*?\s*(?P<fname>[A-Za-z_$][\w$]*)?\s*\((?P<fargs>[^)]*)\))"
    r"|(?:(?:const|let|var)\s+(?P<aname>[A-Za-z_$][\w$]*)\s*=\s*(?:async\s*)?\((?P<aargs>[^)]*)\)\s*=>)"
)
_JS_ASSIGN = re.compile(
    r"^\s*(?:const|let|var)?\s*([A-Za-z_$][\w$]*)\s*=[^=](?P<rhs>.*)$"
)
_JS_REQUIRE = re.compile(
    r"(?:const|let|var)\s+\{?\s*(?P<names>[\w$,\s]+?)\s*\}?\s*=\s*require\(\s*['\"](?P<mod>[^'\"]+)['\"]\s*\)"
)
_JS_IMPORT = re.compile(
    r"import\s+\{?\s*(?P<names>[\w$,\s]+?)\s*\}?\s+from\s+['\"](?P<mod>[^'\"]+)['\"]"
)


def _js_word(token: str) -> re.Pattern[str]:
    return re.compile(rf"(?<![\w$]){re.escape(token)}(?![\w$])")


def _analyze_js(
    rel: str,
    text: str,
    registry: "SinkRegistry",
    alerts: list[TaintAlert],
    flows: list[FlowRecord],
) -> None:
    raw_lines = text.splitlines()
    lines = [_strip_js_noise_keep_templates(l) for l in raw_lines]
    module_aliases: dict[str, str] = {}
    # Aliases come from the raw lines: stripping blanks the module strings.
    for line in raw_lines:
        for rx in (_JS_REQUIRE, _JS_IMPORT):
            m = rx.search(line)
            if m:
                mod = m.group("mod").removeprefix("node:")
                for name in m.group("names").split(","):
                    name = name.strip()
                    if name:
                        module_aliases[name] = mod

    js_specs = registry.for_language("js")
    callee_specs: dict[str, list] = {}
    for spec in js_specs:
        if spec.callee != "*":
            callee_specs.setdefault(spec.callee, []).append(spec)

    idx = 0
    n = len(lines)
    while idx < n:
        m = _JS_HEADER.search(lines[idx])
        if not m:
            idx += 1
            continue
        name = m.group("fname") or m.group("aname") or "<anonymous>"
        raw_args = m.group("fargs") if m.group("fargs") is not None else m.group("aargs")
        params = [
            p.strip().split(":")[0].split("=")[0].strip().lstrip("{").rstrip("}")
            for p in re.split(r"[,{}]", raw_args or "")
        ]
        params = [p for p in params if re.fullmatch(r"[A-Za-z_$][\w$]*", p or "")]
        header_line = idx + 1
        end = _js_body_end(lines, idx)
        if params:
            _scan_js_body(
                rel, name, params, lines, header_line, end, module_aliases,
                callee_specs, alerts, flows,
            )
        idx += 1


def _strip_js_noise_keep_templates(line: str) -> str:
    # Strip quotes/comments but keep template-literal contents so `${x}`
    # interpolation remains visible to the taint scan.
    out: list[str] = []
    quote: str | None = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote in ("'", '"'):
            if ch == "\\":
                out.append("  ")
                i += 2
                continue
            if ch == quote:
                quote = None
            out.append(" ")
            i += 1
            continue
        if ch in "'\"":
            quote = ch
            out.append(" ")
            i += 1
            continue
        if ch == "/" and i + 1 < len(line) and line[i + 1] == "/":
            break
        out.append(ch)
        i += 1
    return "".join(out)


def _js_body_end(lines: list[str], header_idx: int) -> int:
    depth = 0
    opened = False
    for idx in range(header_idx, len(lines)):
        for ch in lines[idx]:
            if ch == "{":
                depth += 1
                opened = True
            elif ch == "}":
                depth -= 1
                if opened and depth == 0:
                    return idx + 1
    return len(lines)


def _scan_js_body(
    rel: str,
    qual: str,
    params: list[str],
    lines: list[str],
    header_line: int,
    end_line: int,
    module_aliases: dict[str, str],
    callee_specs: dict[str, list],
    alerts: list[TaintAlert],
    flows: list[FlowRecord],
) -> None:
    tainted = set(params)

    def text_tainted(fragment: str) -> bool:
        return any(_js_word(t).search(fragment) for t in tainted)

    for lineno in range(header_line + 1, end_line + 1):
        line = lines[lineno - 1]
        am = _JS_ASSIGN.match(line)
        if am and "==" not in line.split("=", 1)[0]:
            target, rhs = am.group(1), am.group("rhs")
            if text_tainted(rhs):
                tainted.add(target)
            else:
                tainted.discard(target)
        for callee, specs in callee_specs.items():
            for cm in re.finditer(
                rf"(?:(?P<prefix>[A-Za-z_$][\w$]*)\s*\.\s*)?{re.escape(callee)}\s*\(", line
            ):
                prefix = cm.group("prefix")
                args_text = _call_args(line, cm.end() - 1)
                if args_text is None:
                    continue
                arg_parts = _split_args(args_text)
                for spec in specs:
                    if not _js_module_ok(spec.module_path, prefix, callee, module_aliases):
                        continue
                    hit = any(
                        pos < len(arg_parts) and text_tainted(arg_parts[pos])
                        for pos in spec.sink_arg_positions
                    )
                    if hit:
                        _record(
                            rel, qual, spec.vuln_class, header_line, lineno,
                            alerts, flows,
                        )
                        return  # one alert per function is enough at fixture scale


def _js_module_ok(
    module_path: str,
    prefix: str | None,
    callee: str,
    module_aliases: dict[str, str],
) -> bool:
    if module_path == "*":
        return True
    if prefix is not None:
        return module_aliases.get(prefix) == module_path or prefix == module_path.split("/")[-1]
    # Bare call: accept when the name was imported from the module, or for
    # ubiquitous globals (fetch) where no import exists.
    imported_from = module_aliases.get(callee)
    if imported_from is not None:
        return imported_from == module_path
    return False


def _call_args(line: str, open_paren: int) -> str | None:
    depth = 0
    for idx in range(open_paren, len(line)):
        ch = line[idx]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return line[open_paren + 1 : idx]
    return line[open_paren + 1 :] or None


def _split_args(args_text: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for ch in args_text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if current:
        parts.append("".join(current))
    return parts
