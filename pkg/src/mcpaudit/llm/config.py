"""Per-role LLM configuration with the published defaults."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any


class Role(str, enum.Enum):
    SURROGATE_AGENT = "surrogate_agent"
    PROMPT_GENERATOR = "prompt_generator"
    STRUCTURE_MUTATOR = "structure_mutator"
    PARAMETER_MUTATOR = "parameter_mutator"
    MUTATION_SCHEDULER = "mutation_scheduler"
    STRATEGY_OPTIMIZER = "strategy_optimizer"
    EXPLOIT_VALIDATOR = "exploit_validator"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RoleConfig:
    role: Role
    model_id: str = "default"
    temperature: float = 0.7
    max_output_tokens: int = 2000
    retry_temperature: float | None = None
    # Output budgets are published as ranges; the effective budget defaults to
    # the upper bound and the lower bound is kept for configuration.
    min_output_tokens: int | None = None
    # The prompt generator runs seeds and an optional refinement turn at
    # different temperatures.
    refinement_temperature: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


def default_role_configs() -> dict[Role, RoleConfig]:
    return {
        Role.SURROGATE_AGENT: RoleConfig(
            role=Role.SURROGATE_AGENT, temperature=0.7, max_output_tokens=2000
        ),
        Role.PROMPT_GENERATOR: RoleConfig(
            role=Role.PROMPT_GENERATOR,
            temperature=0.4,
            refinement_temperature=0.7,
            max_output_tokens=800,
            min_output_tokens=500,
        ),
        Role.STRUCTURE_MUTATOR: RoleConfig(
            role=Role.STRUCTURE_MUTATOR,
            temperature=0.5,
            max_output_tokens=1000,
            min_output_tokens=900,
        ),
        Role.PARAMETER_MUTATOR: RoleConfig(
            role=Role.PARAMETER_MUTATOR,
            temperature=0.6,
            max_output_tokens=1000,
            min_output_tokens=900,
        ),
        Role.MUTATION_SCHEDULER: RoleConfig(
            role=Role.MUTATION_SCHEDULER, temperature=0.1, max_output_tokens=500
        ),
        Role.STRATEGY_OPTIMIZER: RoleConfig(
            role=Role.STRATEGY_OPTIMIZER,
            temperature=0.2,
            max_output_tokens=500,
            min_output_tokens=200,
        ),
        Role.EXPLOIT_VALIDATOR: RoleConfig(
            role=Role.EXPLOIT_VALIDATOR,
            temperature=0.1,
            retry_temperature=0.0,
            max_output_tokens=700,
        ),
    }


def load_role_configs(path: str | Path) -> dict[Role, RoleConfig]:
    """Merge a JSON config file over the defaults.

    Shape: {"roles": {"<role>": {"model_id": ..., "temperature": ..., ...}}}
    """
    configs = default_role_configs()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for role_name, fields in (data.get("roles") or {}).items():
        role = Role(role_name)
        allowed: dict[str, Any] = {
            k: v
            for k, v in fields.items()
            if k
            in (
                "model_id",
                "temperature",
                "max_output_tokens",
                "retry_temperature",
                "min_output_tokens",
                "refinement_temperature",
            )
        }
        configs[role] = replace(configs[role], **allowed)
    return configs
