"""
Dry check of a scenario file against a run configuration, without running it.
"""
from __future__ import annotations

import logging
from fnmatch import fnmatchcase
from pathlib import Path
from typing import List, Optional

from ..actor.protocol import parse_action
from ..config import RunConfig
from ..errors import DuplicateId, MalformedAction, MalformedList
from ..integrations.scripted import Scenario
from ..planner import prompts
from ..planner.planner import extract_plan_text, plan_from_reply
from ..progress.markdown import parse_markdown
from ..progress.schemas import ProgressList
from ..tools.registry import build_registry
from ..tools.schemas import UPDATE_PROGRESS
from ..wire import extract_json_object

logger = logging.getLogger(__name__)

KNOWN_LABELS = ("planner", "factory", "actor:actor-1")


def check_scenario(config: RunConfig, scenario_path: Optional[Path] = None) -> List[str]:
    """Problems found in the scenario; an empty list means it looks runnable.

    Raises ConfigError when the scenario file cannot be loaded at all.
    """
    path = scenario_path or config.backend.scenario
    if path is None:
        return ["no scenario file given and the config names none"]
    scenario = Scenario.from_yaml(Path(path))
    problems: List[str] = []
    if not scenario.steps:
        return ["scenario has no steps"]

    registry = build_registry(
        config.bundle_manifests,
        include_defaults=config.include_default_bundles,
        enable_shell=config.enable_shell,
    )
    tool_names = [tool.name for tool in registry.toolkit_for(registry.bundles)] + [UPDATE_PROGRESS]

    planner_steps = [(index, step) for index, step in enumerate(scenario.steps) if fnmatchcase("planner", step.label)]
    if not planner_steps:
        problems.append("no step answers the planner")

    plan: Optional[ProgressList] = None
    for position, (index, step) in enumerate(planner_steps):
        if position == 0:
            first_prompt = prompts.initial_prompt(config.goal)
            if step.contains and step.contains not in first_prompt:
                problems.append(f"step {index}: '{step.contains}' does not occur in the initial planning prompt")
            try:
                plan = plan_from_reply(step.response, config.goal)
            except (MalformedList, DuplicateId, ValueError) as exc:
                problems.append(f"step {index}: initial plan is unusable: {exc}")
            continue
        problems.extend(_check_decision(index, step.response, config.goal, plan))

    for index, step in enumerate(scenario.steps):
        if not any(fnmatchcase(label, step.label) for label in KNOWN_LABELS):
            problems.append(f"step {index}: label {step.label!r} matches no backend caller")
        if step.label.startswith("actor"):
            try:
                parse_action(step.response, tool_names)
            except MalformedAction as exc:
                problems.append(f"step {index}: actor reply would be rejected: {exc}")

    if config.persona_mode == "generate" and not any(fnmatchcase("factory", step.label) for step in scenario.steps):
        problems.append("persona_mode is 'generate' but no step answers the factory")
    if config.backend.kind not in ("scripted", "record"):
        problems.append(f"backend kind '{config.backend.kind}' does not read scenario files")

    for problem in problems:
        logger.info(f"scenario {path}: {problem}")
    return problems


def _check_decision(index: int, reply: str, goal: str, plan: Optional[ProgressList]) -> List[str]:
    try:
        action = extract_json_object(reply)
    except ValueError as exc:
        return [f"step {index}: planner reply has no JSON action ({exc})"]
    kind = str(action.get("action", "")).lower()
    if kind not in ("dispatch", "finish", "abort"):
        return [f"step {index}: unknown planner action {kind!r}"]
    if kind != "dispatch":
        return []

    plan_text = extract_plan_text(reply, loose_lines=False)
    if plan_text is None:
        return [f"step {index}: dispatch without a plan block"]
    try:
        revised = parse_markdown(plan_text, goal_text=goal)
    except (MalformedList, DuplicateId) as exc:
        return [f"step {index}: plan block does not parse: {exc}"]
    task_id = action.get("task_id")
    known = revised.find(task_id) if isinstance(task_id, str) else None
    if known is None and (plan is None or not isinstance(task_id, str) or plan.find(task_id) is None):
        return [f"step {index}: dispatch target {task_id!r} is not in the plan"]
    return []
