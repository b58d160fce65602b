"""
Planner prompt templates (jinja2).
"""
from __future__ import annotations

from typing import List, Optional

from jinja2 import Environment, StrictUndefined

from ..progress.schemas import ConclusionReport, TaskNode

_env = Environment(
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
    autoescape=False,
)

PLANNER_SYSTEM = (
    "You are the planner of a team of specialist agents. You own the shared task list: "
    "you break the goal into subtasks, revise the list as results come in, and hand out "
    "one subtask at a time."
)

PLAN_GRAMMAR = """- Objective title
    - [ ] Subtask title
        > criteria: how to tell the subtask is done
Markers: [ ] pending, [~] in progress, [x] completed, [!] failed, [-] cancelled.
Objectives (items with children) carry no marker. Indent four spaces per level.
Give a new item an explicit id line (> id: 2.1b) when it must not take a positional id."""

_INITIAL = _env.from_string(
    """Goal: {{ goal }}

Decompose the goal into a hierarchical task list of objectives and concrete subtasks.
Each subtask must be small enough for one specialist agent with a few tools.

Write the list as Markdown inside one ```markdown block, using this grammar:
{{ grammar }}
"""
)

_STEP = _env.from_string(
    """Goal: {{ goal }}
Iteration: {{ iteration }} of {{ budget }}

## Current plan
```markdown
{{ plan }}```

## Progress notes
{{ notes }}

## Next executable subtask
{{ hint }}

## Outcome history
{% for line in history %}
{{ line }}
{% else %}
(no subtask has finished yet)
{% endfor %}

## Instructions
Review the plan against the outcomes above. Keep it as it is when it still works,
or rewrite it: add contingency subtasks after failures, cancel work that is no longer needed.
Completed work cannot be undone. Then choose exactly one action:
dispatch one pending subtask, finish with the final answer once every subtask is settled,
or abort when the goal cannot be reached.

## Output schema
1. The full revised plan in one ```markdown block, keeping every "> id:" line (may be omitted for finish or abort):
{{ grammar }}
2. One ```json block holding the action, one of:
{"action": "dispatch", "task_id": "<id>", "description": "<optional>", "completion_criteria": "<optional>", "rationale": "<why>"}
{"action": "finish", "answer": "<final answer to the goal>", "rationale": "<why>"}
{"action": "abort", "reason": "<why the goal cannot be reached>"}
"""
)

PLAN_REPAIR = (
    "Your plan could not be parsed: {error}\n"
    "Reply with the task list only, inside one ```markdown block."
)

DECISION_REPAIR = (
    "Your decision was rejected: {error}\n"
    "Reply again with the revised plan block and one ```json action block as described in the Output schema."
)


def initial_prompt(goal: str) -> str:
    return _INITIAL.render(goal=goal, grammar=PLAN_GRAMMAR)


def _one_line(text: str, width: int = 100) -> str:
    line = " ".join(text.split())
    return line if len(line) <= width else line[: width - 3] + "..."


def history_lines(history: List[ConclusionReport], window: int) -> List[str]:
    """The last ``window`` reports in full, older ones cut to one line."""
    lines = []
    cutoff = len(history) - window
    for position, report in enumerate(history):
        head = f"- [{report.task_id or '?'}] {report.final_status.value}"
        if position < cutoff:
            lines.append(f"{head}: {_one_line(report.summary)}")
            continue
        entry = f"{head} ({report.actor_id or 'unknown actor'}): {report.summary.strip()}"
        for pointer in report.pointers:
            detail = f" - {pointer.description}" if pointer.description else ""
            entry += f"\n    {pointer.kind}: {pointer.locator}{detail}"
        lines.append(entry)
    return lines


def step_prompt(
    goal: str,
    iteration: int,
    budget: int,
    plan_markdown: str,
    notes: str,
    next_node: Optional[TaskNode],
    history: List[ConclusionReport],
    window: int,
) -> str:
    hint = f"{next_node.id} {next_node.title}" if next_node is not None else "(none)"
    return _STEP.render(
        goal=goal,
        iteration=iteration + 1,
        budget=budget,
        plan=plan_markdown or "(empty)\n",
        notes=notes,
        hint=hint,
        history=history_lines(history, window),
        grammar=PLAN_GRAMMAR,
    )
