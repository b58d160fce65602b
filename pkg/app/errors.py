"""
Exception hierarchy shared by every orchestration component.
"""
from __future__ import annotations

from typing import Optional


class OrchestrationError(Exception):
    """Root of every error raised by the orchestrator."""


# ==================== Progress ====================


class ProgressError(OrchestrationError):
    pass


class MalformedList(ProgressError):
    def __init__(self, line_no: int, detail: str) -> None:
        self.line_no = line_no
        self.detail = detail
        super().__init__(f"line {line_no}: {detail}")


class DuplicateId(ProgressError):
    def __init__(self, task_id: str) -> None:
        self.task_id = task_id
        super().__init__(f"duplicate task id '{task_id}'")


class UnknownTask(ProgressError):
    def __init__(self, task_id: str) -> None:
        self.task_id = task_id
        super().__init__(f"unknown task id '{task_id}'")


class IllegalTransition(ProgressError):
    def __init__(self, task_id: str, old: str, new: str) -> None:
        self.task_id = task_id
        self.old = old
        self.new = new
        super().__init__(f"task '{task_id}' cannot move from {old} to {new}")


# ==================== Planner ====================


class PlannerError(OrchestrationError):
    pass


class PlanParseFailure(PlannerError):
    pass


class InvalidDecision(PlannerError):
    def __init__(self, detail: str) -> None:
        self.detail = detail
        super().__init__(detail)


class BudgetExhausted(PlannerError):
    pass


# ==================== Factory / actor / tools ====================


class FactoryError(OrchestrationError):
    pass


class NoBundleMatched(FactoryError):
    pass


class ActorError(OrchestrationError):
    pass


class MalformedAction(ActorError):
    pass


class ToolError(OrchestrationError):
    pass


class DuplicateRegistration(ToolError):
    pass


class SandboxViolation(ToolError):
    def __init__(self, path: str) -> None:
        self.path = path
        super().__init__("path outside sandbox")


# ==================== Backends ====================


class BackendError(OrchestrationError):
    pass


class ScenarioMismatch(BackendError):
    def __init__(self, step_index: int, expected: Optional[str], detail: str = "") -> None:
        self.step_index = step_index
        self.expected = expected
        message = f"scenario step {step_index} expected {expected!r}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class ReplayMiss(BackendError):
    def __init__(self, key: str) -> None:
        self.key = key
        super().__init__(f"no recorded response for request {key}")


class ConfigError(OrchestrationError):
    pass
