"""Property checkers and the knowledge oracle."""

from .compare import (
    EQUAL,
    FIRST,
    INCOMPARABLE,
    SECOND,
    Comparison,
    ComparisonError,
    check_divergence_waiting,
    compare_domination,
    compare_lex_domination,
    first_divergence,
)
from .epistemic import (
    check_awareness,
    check_front_memory_agreement,
    check_implements,
    check_next_awareness,
    check_pos_knowledge,
    check_sigma_awareness,
    check_sufficiently_rich_knowledge,
    extract_policy,
)
from .knowledge import K, Pred, Var, exists_agent, forall_agents, front, going, intent_is, knows, lane_is, move_in, pos_is
from .properties import (
    check_liveness_bounded,
    check_safety,
    check_validity,
    find_unnecessary_waiting,
    safe_to_go,
    unnecessary_waiting_points,
)

__all__ = [name for name in dir() if not name.startswith("_")]
