"""
Dynamic planner: builds the initial plan, then each iteration revises the plan
and picks one tactical action.
"""
from __future__ import annotations

import json
import logging
import re
from typing import Any, Dict, List, Optional, Tuple

from ..errors import (
    BudgetExhausted,
    DuplicateId,
    InvalidDecision,
    MalformedList,
    PlannerError,
    PlanParseFailure,
)
from ..integrations.base import ChatMessage, CompletionBackend, CompletionRequest
from ..progress.markdown import parse_markdown, serialize_markdown
from ..progress.schemas import ConclusionReport, ProgressList, ReferencePointer, TaskStatus
from ..progress.state import DependencyMode, apply_conclusion, merge_revision, next_executable, render_notes
from ..wire import extract_json_object, fenced_blocks, strip_fences
from . import prompts
from .schemas import Abort, Dispatch, Finish, PlannerDecision, PlannerState, SubtaskSpec

logger = logging.getLogger(__name__)

LABEL = "planner"
CONTEXT_POINTER_LIMIT = 10

_LIST_LINE = re.compile(r"^\s*(- |> )")
_PLAN_LANGUAGES = ("markdown", "md")


def _conversation(user: str, rejected: List[Tuple[str, str]]) -> CompletionRequest:
    messages = [
        ChatMessage(role="system", content=prompts.PLANNER_SYSTEM),
        ChatMessage(role="user", content=user),
    ]
    for raw, repair in rejected:
        messages.append(ChatMessage(role="assistant", content=raw))
        messages.append(ChatMessage(role="user", content=repair))
    return CompletionRequest(label=LABEL, messages=messages)


def _is_task_list(body: str) -> bool:
    try:
        json.loads(body)
    except json.JSONDecodeError:
        pass
    else:
        return False
    try:
        return bool(parse_markdown(body).roots)
    except (MalformedList, DuplicateId):
        return False


def extract_plan_text(reply: str, loose_lines: bool = True) -> Optional[str]:
    """The plan from a ```markdown block or a bare fence holding a task list.

    With ``loose_lines`` the reply's unfenced list lines count as a plan too.
    """
    for lang, body in fenced_blocks(reply):
        if lang in _PLAN_LANGUAGES or (lang == "" and _is_task_list(body)):
            return body
    if not loose_lines:
        return None
    lines = [line for line in strip_fences(reply).split("\n") if _LIST_LINE.match(line)]
    return "\n".join(lines) + "\n" if lines else None


# ==================== initial plan ====================


def plan_from_reply(reply: str, goal: str) -> ProgressList:
    text = extract_plan_text(reply)
    if text is None:
        raise ValueError("no task list found in the reply")
    plan = parse_markdown(text, goal_text=goal)
    if not plan.roots:
        raise ValueError("the task list is empty")
    if not any(leaf.status is TaskStatus.PENDING for leaf in plan.leaves()):
        raise ValueError("the task list has no pending subtask")
    return plan


def initialize_plan(goal: str, backend: CompletionBackend) -> ProgressList:
    if not goal.strip():
        raise PlannerError("goal must not be empty")
    user = prompts.initial_prompt(goal)
    rejected: List[Tuple[str, str]] = []
    last_error = ""
    for _ in range(2):
        reply = backend.complete(_conversation(user, rejected))
        try:
            plan = plan_from_reply(reply, goal)
        except (MalformedList, DuplicateId, ValueError) as exc:
            last_error = str(exc)
            logger.info(f"initial plan rejected: {last_error}")
            rejected.append((reply, prompts.PLAN_REPAIR.format(error=last_error)))
            continue
        logger.info(f"Initial plan: {len(plan.roots)} objectives, {len(plan.leaves())} subtasks")
        return plan
    raise PlanParseFailure(f"no usable plan after one repair attempt: {last_error}")


# ==================== iteration ====================


def context_pointers(history: List[ConclusionReport], limit: int = CONTEXT_POINTER_LIMIT) -> List[ReferencePointer]:
    """Most recent distinct pointers from earlier reports, oldest first."""
    picked: List[ReferencePointer] = []
    for report in reversed(history):
        for pointer in reversed(report.pointers):
            if pointer not in picked:
                picked.append(pointer)
    return list(reversed(picked[:limit]))


def _split_reply(reply: str) -> Tuple[Optional[str], Dict[str, Any]]:
    try:
        action = extract_json_object(reply)
    except ValueError as exc:
        raise InvalidDecision(f"no action object: {exc}") from exc
    return extract_plan_text(reply, loose_lines=False), action


def _text(action: Dict[str, Any], *keys: str) -> str:
    for key in keys:
        value = action.get(key)
        if isinstance(value, str) and value.strip():
            return value.strip()
    return ""


def decode_decision(reply: str, state: PlannerState) -> PlannerDecision:
    plan_text, action = _split_reply(reply)
    kind = _text(action, "action").lower()
    if kind not in ("dispatch", "finish", "abort"):
        raise InvalidDecision("'action' must be one of dispatch, finish, abort")
    if plan_text is None and kind == "dispatch":
        raise InvalidDecision("a dispatch must come with the revised plan")

    proposed = state.plan if plan_text is None else parse_markdown(plan_text, goal_text=state.goal)
    revised = merge_revision(state.plan, proposed)
    rationale = _text(action, "rationale")

    if kind == "dispatch":
        task_id = _text(action, "task_id")
        if not task_id:
            raise InvalidDecision("a dispatch needs a 'task_id'")
        node = revised.find(task_id)
        subtask = SubtaskSpec(
            task_id=task_id,
            description=_text(action, "description") or (node.title if node else task_id),
            completion_criteria=_text(action, "completion_criteria") or (node.completion_criteria if node else None),
            context_pointers=context_pointers(state.history),
        )
        chosen = Dispatch(subtask=subtask)
    elif kind == "finish":
        answer = _text(action, "answer", "final_answer")
        if not answer:
            raise InvalidDecision("a finish needs a non-empty 'answer'")
        chosen = Finish(final_answer=answer)
    else:
        chosen = Abort(reason=_text(action, "reason") or "no reason given")

    return PlannerDecision(revised_list=revised, action=chosen, rationale=rationale, proposed_markdown=plan_text)


def validate_decision(decision: PlannerDecision, state: PlannerState) -> PlannerDecision:
    revised = decision.revised_list
    action = decision.action
    if isinstance(action, Dispatch):
        task_id = action.subtask.task_id
        node = revised.find(task_id)
        if node is None:
            raise InvalidDecision(f"dispatch target '{task_id}' is not in the revised plan")
        if not node.is_leaf:
            raise InvalidDecision(f"dispatch target '{task_id}' is an objective, not a subtask")
        if node.status not in (TaskStatus.PENDING, TaskStatus.IN_PROGRESS):
            raise InvalidDecision(f"cannot dispatch '{task_id}': it is already {node.status.value}")
    elif isinstance(action, Finish):
        open_ids = [
            leaf.id for leaf in revised.leaves() if leaf.status in (TaskStatus.PENDING, TaskStatus.IN_PROGRESS)
        ]
        if open_ids:
            raise InvalidDecision(
                f"cannot finish while {', '.join(open_ids)} remain open; cancel them in the plan first"
            )
    return decision


def plan_step(
    state: PlannerState,
    backend: CompletionBackend,
    dependency_mode: DependencyMode = "strict",
    history_window: int = 5,
) -> PlannerDecision:
    if state.iteration >= state.budget:
        raise BudgetExhausted(f"planner budget of {state.budget} iterations is used up")

    user = prompts.step_prompt(
        goal=state.goal,
        iteration=state.iteration,
        budget=state.budget,
        plan_markdown=serialize_markdown(state.plan, explicit_ids=True),
        notes=render_notes(state.plan),
        next_node=next_executable(state.plan, dependency_mode),
        history=state.history,
        window=history_window,
    )
    rejected: List[Tuple[str, str]] = []
    last_error = ""
    for _ in range(2):
        reply = backend.complete(_conversation(user, rejected))
        try:
            return validate_decision(decode_decision(reply, state), state)
        except (InvalidDecision, MalformedList, DuplicateId, ValueError) as exc:
            last_error = str(exc)
            logger.info(f"planner decision rejected at iteration {state.iteration + 1}: {last_error}")
            rejected.append((reply, prompts.DECISION_REPAIR.format(error=last_error)))
    raise InvalidDecision(f"after one repair attempt: {last_error}")


def evaluate_outcome(state: PlannerState, report: ConclusionReport, timestamp: int = 0) -> PlannerState:
    """Fold one conclusion into the state. Progress errors leave ``state`` untouched."""
    updated = apply_conclusion(state.plan, report, timestamp=timestamp)
    return state.model_copy(
        update={
            "plan": updated,
            "history": [*state.history, report],
            "iteration": state.iteration + 1,
        }
    )
