#!/usr/bin/env python3
"""Self-contained demo: full three-phase scan of the bundled vulnerable
fixture repo against the loopback mock server, driven by the scripted LLM.

Usage: python scripts/run_demo_scan.py [--out DIR] [--rounds N]
"""
import argparse
import json
import shlex
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

from mcpaudit.report.pipeline import ScanConfig, scan  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=REPO_ROOT / "demo-out")
    parser.add_argument("--rounds", type=int, default=3)
    parser.add_argument("--rng-seed", type=int, default=1337)
    args = parser.parse_args()

    config = ScanConfig(
        out_dir=args.out,
        rounds=args.rounds,
        rng_seed=args.rng_seed,
        scripted_llm=REPO_ROOT / "tests" / "data" / "scripted" / "e2e_cmdi.json",
    )
    server_cmd = [sys.executable, "-m", "mcpaudit.mockserver", "--profile", "cmdi"]
    print(f"target repo : {REPO_ROOT / 'tests' / 'data' / 'cmdi_repo'}")
    print(f"server      : {shlex.join(server_cmd)}")
    report, metrics = scan(REPO_ROOT / "tests" / "data" / "cmdi_repo", server_cmd, config)

    print(f"\nstatus      : {report.status}")
    print(f"chains      : {len(report.chains)}")
    print(f"rounds      : {metrics.rounds_executed}")
    print(f"phase I     : {metrics.phase1_seconds:.2f}s")
    print(f"phase II+III: {metrics.phase23_seconds:.2f}s")
    for category, findings in report.findings.items():
        for finding in findings:
            print(f"\n[{category}] stage={finding.verdict.stage.label}")
            print(f"  prompt : {finding.prompt}")
            print(f"  chain  : {finding.chain.describe()}")
            if finding.oracle_evidence:
                print(f"  sink   : {finding.oracle_evidence[0].sink} "
                      f"<- {finding.oracle_evidence[0].args_preview!r}")
    print(f"\nartifacts in {args.out}/ (report.json, journal.jsonl, oracle.jsonl, ...)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
