"""
Text protocol between an actor and its backend.

Every turn the backend answers with one JSON object, optionally inside a
```json fence:

    {"thought": "...", "action": {"tool": "echo", "args": {"msg": "hi"}}}
    {"thought": "...", "final": {"status": "completed", "summary": "...",
                                 "pointers": [...], "status_updates": [...]}}
"""
from __future__ import annotations

from typing import Any, Dict, List, Sequence, Tuple

from pydantic import ValidationError

from ..errors import MalformedAction
from ..planner.schemas import SubtaskSpec
from ..tools.schemas import UPDATE_PROGRESS
from ..wire import canonical_json, extract_json_object
from .schemas import ActionRequest, Finalize, ReactStep, ToolCall

OUTPUT_FORMAT = f"""Reply with exactly one JSON object per turn and nothing else.
To call a tool:
{{"thought": "<your reasoning>", "action": {{"tool": "<tool name>", "args": {{"<param>": <value>}}}}}}
To end the subtask:
{{"thought": "<your reasoning>", "final": {{"status": "completed" | "failed", "summary": "<what you found or did>", "pointers": [{{"kind": "file" | "url" | "record" | "inline", "locator": "<where>", "description": "<what>"}}], "status_updates": [{{"task_id": "<id>", "status": "completed" | "failed"}}]}}}}
Call {UPDATE_PROGRESS} to report milestones and obstacles as they happen."""

REPAIR_TEMPLATE = (
    "Your reply could not be parsed: {error}\n"
    "Reply again with exactly one JSON object as described in the Output Format section."
)


def parse_action(text: str, tool_names: Sequence[str]) -> Tuple[str, ActionRequest]:
    try:
        data = extract_json_object(text)
    except ValueError as exc:
        raise MalformedAction(str(exc)) from exc

    thought = data.get("thought", "")
    if not isinstance(thought, str):
        raise MalformedAction("'thought' must be a string")

    has_action = "action" in data
    has_final = "final" in data
    if has_action == has_final:
        raise MalformedAction("reply must contain exactly one of 'action' or 'final'")

    try:
        if has_final:
            if not isinstance(data["final"], dict):
                raise MalformedAction("'final' must be an object")
            return thought, Finalize(**data["final"])
        action = data["action"]
        if not isinstance(action, dict) or not isinstance(action.get("tool"), str):
            raise MalformedAction("'action' must be an object with a 'tool' name")
        call = ToolCall(tool=action["tool"], args=action.get("args") or {})
    except ValidationError as exc:
        raise MalformedAction(f"invalid action: {exc.errors()[0]['msg']}") from exc

    if call.tool not in tool_names:
        raise MalformedAction(f"unknown tool '{call.tool}'; available: {', '.join(tool_names)}")
    return thought, call


def action_to_wire(thought: str, action: ActionRequest) -> str:
    """Canonical JSON for a parsed turn, as replayed into later requests."""
    payload: Dict[str, Any] = {"thought": thought}
    if isinstance(action, ToolCall):
        payload["action"] = {"tool": action.tool, "args": action.args}
    else:
        payload["final"] = action.model_dump(mode="json", exclude={"kind"})
    return canonical_json(payload)


def subtask_message(subtask: SubtaskSpec) -> str:
    lines = [
        f"Subtask {subtask.task_id}: {subtask.description}",
        f"Completion criteria: {subtask.completion_criteria or '(none given)'}",
        "Context from earlier work:",
    ]
    if subtask.context_pointers:
        for pointer in subtask.context_pointers:
            detail = f" - {pointer.description}" if pointer.description else ""
            lines.append(f"- [{pointer.kind}] {pointer.locator}{detail}")
    else:
        lines.append("(none)")
    return "\n".join(lines)


def observation_message(observation: str) -> str:
    return f"Observation: {observation}"


def transcript(steps: List[ReactStep]) -> List[Tuple[str, str]]:
    """(role, content) pairs that follow the subtask message."""
    turns: List[Tuple[str, str]] = []
    for step in steps:
        for rejected in step.repairs:
            turns.append(("assistant", rejected.raw))
            turns.append(("user", REPAIR_TEMPLATE.format(error=rejected.error)))
        turns.append(("assistant", action_to_wire(step.thought, step.action)))
        if isinstance(step.action, ToolCall):
            turns.append(("user", observation_message(step.observation)))
    return turns
