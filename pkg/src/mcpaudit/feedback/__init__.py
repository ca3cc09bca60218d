"""Round scoring, exploit-stage validation, and seed-pool scheduling."""
from .pool import (
    CHAIN_PENALTY_INCREMENT,
    SELECTION_PENALTY_INCREMENT,
    TOP_K,
    SchedulingError,
    SeedPoolEntry,
    fitness,
    schedule_seed,
    top_k_entries,
)
from .scoring import (
    INJECTION_SIGNALS,
    MIN_MATCH_LEN,
    RoundScores,
    score_round_llm,
    score_round_rule_based,
)
from .validation import (
    BLOCKER_MARKERS,
    TriggerStage,
    ValidatorVerdict,
    repair_verdict,
    validate_llm,
    validate_rule_based,
    verdict_from_stage,
)

__all__ = [
    "BLOCKER_MARKERS",
    "CHAIN_PENALTY_INCREMENT",
    "INJECTION_SIGNALS",
    "MIN_MATCH_LEN",
    "RoundScores",
    "SELECTION_PENALTY_INCREMENT",
    "SchedulingError",
    "SeedPoolEntry",
    "TOP_K",
    "TriggerStage",
    "ValidatorVerdict",
    "fitness",
    "repair_verdict",
    "schedule_seed",
    "score_round_llm",
    "score_round_rule_based",
    "top_k_entries",
    "validate_llm",
    "validate_rule_based",
    "verdict_from_stage",
]
