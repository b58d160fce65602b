"""
Dynamic planner: strategic plan revision plus one tactical action per iteration.
"""
from .planner import (
    context_pointers,
    decode_decision,
    evaluate_outcome,
    extract_plan_text,
    initialize_plan,
    plan_step,
    validate_decision,
)
from .schemas import Abort, Dispatch, Finish, PlannerAction, PlannerDecision, PlannerState, SubtaskSpec

__all__ = [
    "Abort",
    "Dispatch",
    "Finish",
    "PlannerAction",
    "PlannerDecision",
    "PlannerState",
    "SubtaskSpec",
    "context_pointers",
    "decode_decision",
    "evaluate_outcome",
    "extract_plan_text",
    "initialize_plan",
    "plan_step",
    "validate_decision",
]
