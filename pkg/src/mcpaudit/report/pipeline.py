"""End-to-end scan orchestration across the three pipeline phases."""
from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..anchor.enrich import emit_call_chains, enrich_alerts
from ..anchor.flows import load_flow_table, synthesize_flows
from ..anchor.inventory import scan_function_inventory
from ..anchor.minitaint import run_mini_taint
from ..anchor.sarif import parse_sarif
from ..anchor.types import CallChain, EnrichedAlert
from ..evolve.loop import EvolutionConfig, EvolutionResult, PromptEvolver
from ..harness.oracle import OracleWatcher
from ..harness.session import connect
from ..llm.config import Role, RoleConfig, default_role_configs, load_role_configs
from ..llm.gateway import HttpProvider, LlmGateway, Provider, ScriptedProvider
from ..sinks import ConfigurationError, emit_manifest, load_registry
from .aggregate import Report, RunMetrics, STATUS_NO_CHAINS, STATUS_OK, aggregate
from .journal import JournalWriter

logger = logging.getLogger(__name__)


@dataclass
class ScanConfig:
    out_dir: Path
    rounds: int = 12
    sarif_path: Path | None = None
    flows_path: Path | None = None
    static_only: bool = False
    rng_seed: int = 0
    scripted_llm: Path | None = None
    config_path: Path | None = None
    max_agent_steps: int = 6
    scoring_mode: str = "rule"
    validation_mode: str = "rule"
    handshake_timeout: float = 15.0
    call_timeout: float = 30.0
    server_env: dict[str, str] = field(default_factory=dict)
    server_cwd: Path | None = None

    def sink_overrides(self) -> list[dict[str, Any]]:
        """Optional registry additions/replacements from the config file
        (key "sink_overrides": JSON list of sink specs)."""
        if self.config_path is None:
            return []
        raw = json.loads(Path(self.config_path).read_text(encoding="utf-8"))
        return list(raw.get("sink_overrides") or [])


def load_gateway(config: ScanConfig) -> LlmGateway:
    role_configs: dict[Role, RoleConfig]
    provider_settings: dict[str, Any] = {}
    if config.config_path is not None:
        role_configs = load_role_configs(config.config_path)
        raw = json.loads(Path(config.config_path).read_text(encoding="utf-8"))
        provider_settings = raw.get("provider") or {}
    else:
        role_configs = default_role_configs()

    provider: Provider
    if config.scripted_llm is not None:
        provider = ScriptedProvider.from_file(config.scripted_llm)
    elif provider_settings.get("kind") == "scripted":
        provider = ScriptedProvider.from_file(provider_settings["script"])
    elif provider_settings.get("base_url"):
        import os

        key_env = provider_settings.get("api_key_env", "")
        provider = HttpProvider(
            base_url=provider_settings["base_url"],
            api_key=os.environ.get(key_env, "") if key_env else "",
        )
    else:
        raise ConfigurationError(
            "no LLM provider configured: pass --scripted-llm or a config file "
            "with a provider section (or use --static-only)"
        )
    return LlmGateway(provider, role_configs)


def run_static_phase(
    target_repo: Path, config: ScanConfig
) -> tuple[list[EnrichedAlert], list[CallChain]]:
    """Phase I: ingest or produce alerts, anchor them, fan out call chains,
    and persist the enriched report and chain list."""
    registry = load_registry(config.sink_overrides())
    inventory = scan_function_inventory(target_repo)
    if config.sarif_path is not None:
        parsed = parse_sarif(Path(config.sarif_path).read_bytes())
        alerts = parsed.alerts
        if config.flows_path is not None:
            flows = load_flow_table(config.flows_path)
        else:
            flows = synthesize_flows(alerts, inventory)
    else:
        alerts, flows = run_mini_taint(target_repo, registry)
    enriched = enrich_alerts(alerts, inventory, flows)
    chains = emit_call_chains(enriched)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "enriched.json").write_text(
        json.dumps(
            {"schema_version": 1, "alerts": [e.to_dict() for e in enriched]},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    (out / "chains.json").write_text(
        json.dumps([c.to_dict() for c in chains], indent=2) + "\n", encoding="utf-8"
    )
    return enriched, chains


def load_static_artifacts(static_dir: Path) -> tuple[list[EnrichedAlert], list[CallChain]]:
    """Re-load a previous static phase's outputs (for the fuzz subcommand)."""
    enriched_doc = json.loads((static_dir / "enriched.json").read_text(encoding="utf-8"))
    enriched = [EnrichedAlert.from_dict(d) for d in enriched_doc.get("alerts", [])]
    chains_doc = json.loads((static_dir / "chains.json").read_text(encoding="utf-8"))
    chains = [CallChain.from_dict(c) for c in chains_doc]
    return enriched, chains


def run_dynamic_phase(
    enriched: list[EnrichedAlert],
    chains: list[CallChain],
    server_command: list[str],
    config: ScanConfig,
    target_repo: Path,
) -> tuple[EvolutionResult, LlmGateway]:
    """Phases II+III over already-anchored chains (manifest must exist)."""
    out = config.out_dir
    oracle_out = out / "oracle.jsonl"
    manifest_path = out / "manifest.json"
    oracle_out.touch(exist_ok=True)
    gateway = load_gateway(config)

    def open_session():
        return connect(
            server_command,
            env=config.server_env,
            oracle_out=oracle_out,
            manifest_path=manifest_path,
            handshake_timeout=config.handshake_timeout,
            call_timeout=config.call_timeout,
            cwd=config.server_cwd,
        )

    session = open_session()
    journal = JournalWriter(out, chains)
    evolver = PromptEvolver(
        session=session,
        gateway=gateway,
        oracle=OracleWatcher(oracle_out),
        config=EvolutionConfig(
            max_agent_steps=config.max_agent_steps,
            scoring_mode=config.scoring_mode,
            validation_mode=config.validation_mode,
        ),
        journal_sink=journal.append,
        reconnect=open_session,
    )
    try:
        result = evolver.run(
            chains,
            rounds=config.rounds,
            enriched_report=enriched,
            rng=random.Random(config.rng_seed),
        )
    finally:
        journal.close()
        session.close()
        if evolver.session is not session:
            evolver.session.close()
    if result.aborted:
        logger.warning("evolution aborted early: %s", result.abort_reason)
    return result, gateway


def scan(
    target_repo: str | Path,
    server_command: list[str] | None,
    config: ScanConfig,
) -> tuple[Report, RunMetrics]:
    """Full pipeline. Phase I artifacts are always persisted; zero anchored
    chains is a success with an explicit status, not an error."""
    repo = Path(target_repo)
    if not repo.is_dir():
        raise ConfigurationError(f"target repo {repo} is not a directory")
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    metrics = RunMetrics()
    t_start = time.perf_counter()

    enriched, chains = run_static_phase(repo, config)
    if chains:
        registry = load_registry(config.sink_overrides())
        manifest = emit_manifest(chains, registry, repo, out / "oracle.jsonl")
        manifest.write(out / "manifest.json")
    metrics.phase1_seconds = time.perf_counter() - t_start

    if not chains:
        report = Report(status=STATUS_NO_CHAINS, findings={}, chains=[], metrics={})
        metrics.total_seconds = time.perf_counter() - t_start
        _write_outputs(report, metrics, out)
        return report, metrics

    if config.static_only or server_command is None:
        report = Report(status=STATUS_OK, findings={}, chains=chains, metrics={})
        metrics.phase23_seconds = 0.0
        metrics.total_seconds = time.perf_counter() - t_start
        _write_outputs(report, metrics, out)
        return report, metrics

    t_dynamic = time.perf_counter()
    result, gateway = run_dynamic_phase(enriched, chains, server_command, config, repo)

    metrics.phase23_seconds = time.perf_counter() - t_dynamic
    metrics.rounds_executed = len(result.rounds)
    metrics.tokens = gateway.token_usage()
    metrics.total_seconds = time.perf_counter() - t_start

    report = aggregate(out, chains=chains, metrics=metrics, status=STATUS_OK)
    _write_outputs(report, metrics, out)
    return report, metrics


def _write_outputs(report: Report, metrics: RunMetrics, out: Path) -> None:
    report.write(out / "report.json")
    (out / "metrics.json").write_text(
        json.dumps(metrics.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
