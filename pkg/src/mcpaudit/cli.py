"""Command-line surface.

Subcommands: static, fuzz, scan, report, mock-server.
Exit codes: 0 success (findings or none), 2 configuration error,
3 target-launch failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import mockserver
from .harness.session import SessionError
from .report.aggregate import aggregate
from .report.pipeline import (
    ScanConfig,
    load_static_artifacts,
    run_dynamic_phase,
    scan,
)
from .sinks import ConfigurationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LAUNCH = 3


def _add_common_scan_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rounds", type=int, default=12, help="total round budget R")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--config", type=Path, help="JSON config (roles, provider)")
    parser.add_argument("--scripted-llm", type=Path, help="scripted provider playback file")
    parser.add_argument("--rng-seed", type=int, default=0)
    parser.add_argument("--sarif", type=Path, help="ingest this SARIF instead of the built-in pass")
    parser.add_argument("--flows", type=Path, help="tab-separated flow-table sidecar")
    parser.add_argument("--scoring", choices=("rule", "llm"), default="rule")
    parser.add_argument("--validation", choices=("rule", "llm"), default="rule")
    parser.add_argument("--max-agent-steps", type=int, default=6)
    parser.add_argument(
        "--server-env",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="extra environment for the target server (repeatable)",
    )


def _scan_config(args: argparse.Namespace, static_only: bool = False) -> ScanConfig:
    env: dict[str, str] = {}
    for item in getattr(args, "server_env", []):
        key, _, value = item.partition("=")
        env[key] = value
    return ScanConfig(
        out_dir=args.out,
        rounds=args.rounds,
        sarif_path=args.sarif,
        flows_path=args.flows,
        static_only=static_only,
        rng_seed=args.rng_seed,
        scripted_llm=args.scripted_llm,
        config_path=args.config,
        max_agent_steps=args.max_agent_steps,
        scoring_mode=args.scoring,
        validation_mode=args.validation,
        server_env=env,
    )


def _server_command(args: argparse.Namespace) -> list[str]:
    return shlex.split(args.server_cmd)


def cmd_static(args: argparse.Namespace) -> int:
    config = _scan_config(args, static_only=True)
    report, _metrics = scan(args.repo, None, config)
    print(f"chains: {len(report.chains)} ({report.status})")
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    if args.targets:
        return _cmd_scan_many(args)
    config = _scan_config(args, static_only=args.static_only)
    command = _server_command(args) if args.server_cmd else None
    if command is None and not args.static_only:
        raise ConfigurationError("scan needs --server-cmd (or --static-only)")
    report, metrics = scan(args.repo, command, config)
    print(
        f"status: {report.status}; findings: {report.finding_count()}; "
        f"chains: {len(report.chains)}; rounds: {metrics.rounds_executed}"
    )
    return EXIT_OK


def _cmd_scan_many(args: argparse.Namespace) -> int:
    """Independent per-server pipelines with isolated journals and oracle
    files, run on a small worker pool."""
    targets = json.loads(Path(args.targets).read_text(encoding="utf-8"))
    if not isinstance(targets, list):
        raise ConfigurationError("--targets must be a JSON list")

    def one(index: int, entry: dict) -> tuple[str, str, int]:
        sub = argparse.Namespace(**vars(args))
        sub.out = args.out / f"target-{index:02d}"
        config = _scan_config(sub, static_only=args.static_only)
        command = shlex.split(entry["server_cmd"]) if entry.get("server_cmd") else None
        report, _ = scan(entry["repo"], command, config)
        return entry["repo"], report.status, report.finding_count()

    with ThreadPoolExecutor(max_workers=max(1, args.parallel)) as pool:
        results = list(pool.map(lambda pair: one(*pair), enumerate(targets)))
    for repo, status, findings in results:
        print(f"{repo}: {status}, findings={findings}")
    return EXIT_OK


def cmd_fuzz(args: argparse.Namespace) -> int:
    """Phases II+III over an existing static run (chains + enriched report)."""
    static_dir = args.static_dir
    enriched, chains = load_static_artifacts(static_dir)
    if not chains:
        raise ConfigurationError(f"no chains in {static_dir}")
    config = _scan_config(args)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = static_dir / "manifest.json"
    if manifest.exists() and static_dir != config.out_dir:
        (config.out_dir / "manifest.json").write_text(
            manifest.read_text(encoding="utf-8"), encoding="utf-8"
        )
    repo = Path(args.repo) if args.repo else static_dir
    result, gateway = run_dynamic_phase(
        enriched, chains, _server_command(args), config, repo
    )
    report = aggregate(config.out_dir, chains=chains)
    report.write(config.out_dir / "report.json")
    print(
        f"findings: {report.finding_count()}; triggered: {len(result.triggered)}; "
        f"rounds: {len(result.rounds)}"
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = aggregate(args.journal)
    out = args.out or (Path(args.journal) / "report.json")
    report.write(out)
    print(f"report written to {out} ({report.finding_count()} findings)")
    return EXIT_OK


def cmd_mock_server(args: argparse.Namespace) -> int:
    return mockserver.serve(args.profile)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcpaudit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_static = sub.add_parser("static", help="phase I only: anchor alerts, emit chains")
    p_static.add_argument("--repo", type=Path, required=True)
    _add_common_scan_args(p_static)
    p_static.set_defaults(func=cmd_static)

    p_scan = sub.add_parser("scan", help="full three-phase pipeline")
    p_scan.add_argument("--repo", type=Path)
    p_scan.add_argument("--server-cmd", help="target MCP server command line")
    p_scan.add_argument("--static-only", action="store_true")
    p_scan.add_argument("--targets", type=Path, help="JSON list of {repo, server_cmd}")
    p_scan.add_argument("--parallel", type=int, default=1)
    _add_common_scan_args(p_scan)
    p_scan.set_defaults(func=cmd_scan)

    p_fuzz = sub.add_parser("fuzz", help="phases II+III over an existing static run")
    p_fuzz.add_argument("--static-dir", type=Path, required=True,
                        help="output directory of a previous static run")
    p_fuzz.add_argument("--repo", type=Path)
    p_fuzz.add_argument("--server-cmd", required=True)
    _add_common_scan_args(p_fuzz)
    p_fuzz.set_defaults(func=cmd_fuzz)

    p_report = sub.add_parser("report", help="aggregate a run journal into a report")
    p_report.add_argument("--journal", type=Path, required=True)
    p_report.add_argument("--out", type=Path)
    p_report.set_defaults(func=cmd_report)

    p_mock = sub.add_parser("mock-server", help="loopback mock MCP server")
    p_mock.add_argument("--profile", required=True, choices=mockserver.PROFILES)
    p_mock.set_defaults(func=cmd_mock_server)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SessionError as exc:
        print(f"target launch failure: {exc}", file=sys.stderr)
        return EXIT_LAUNCH


if __name__ == "__main__":
    sys.exit(main())
