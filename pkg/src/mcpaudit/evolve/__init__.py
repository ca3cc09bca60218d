"""Feedback-driven prompt evolution over anchored call chains."""
from .chromosome import Chromosome
from .context import TaintContext, bind_tool_schema, build_taint_context
from .loop import (
    EmptyRoundError,
    EvolutionConfig,
    EvolutionResult,
    PromptEvolver,
    RoundRecord,
    select_winner,
)
from .mutate import (
    PARAMETER,
    STRUCTURE,
    fallback_mutator_rule,
    parameter_mutate,
    schedule_mutator,
    structure_mutate,
)
from .seeds import extract_fenced_prompt, generate_seeds
from .styles import DEFAULT_STYLES, STYLE_BY_ID, StyleTemplate

__all__ = [
    "Chromosome",
    "DEFAULT_STYLES",
    "EmptyRoundError",
    "EvolutionConfig",
    "EvolutionResult",
    "PARAMETER",
    "PromptEvolver",
    "RoundRecord",
    "STRUCTURE",
    "STYLE_BY_ID",
    "StyleTemplate",
    "TaintContext",
    "bind_tool_schema",
    "build_taint_context",
    "extract_fenced_prompt",
    "fallback_mutator_rule",
    "generate_seeds",
    "parameter_mutate",
    "schedule_mutator",
    "select_winner",
    "structure_mutate",
]
