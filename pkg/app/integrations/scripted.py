"""
Scripted backend: answers from a scenario transcript instead of a model.

Scenario file (YAML)::

    strict: true
    steps:
      - label: planner          # shell-style pattern, e.g. "actor:*"
        contains: decompose     # must occur in the latest user message
        response: |
          - [ ] answer directly

A ``response`` may also be a mapping. ``{plan, action}`` renders to the
canonical planner reply; a mapping with ``thought`` renders as the JSON object
an actor would emit.
"""
from __future__ import annotations

import logging
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Any, List, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..errors import ConfigError, ScenarioMismatch
from ..wire import canonical_json, planner_reply
from .base import CompletionBackend, CompletionRequest

logger = logging.getLogger(__name__)


class ScenarioStep(BaseModel):
    label: str = "*"
    contains: Optional[str] = None
    response: str

    @field_validator("response", mode="before")
    @classmethod
    def _render_response(cls, value: Any) -> Any:
        if isinstance(value, dict):
            if "thought" in value:
                return canonical_json(value)
            unknown = set(value) - {"plan", "action"}
            if unknown:
                raise ValueError(f"unexpected response keys: {sorted(unknown)}")
            return planner_reply(value.get("plan"), value.get("action"))
        return value

    def matches(self, request: CompletionRequest) -> bool:
        if not fnmatchcase(request.label, self.label):
            return False
        return self.contains is None or self.contains in request.latest_user()


class Scenario(BaseModel):
    strict: bool = True
    steps: List[ScenarioStep] = Field(default_factory=list)

    @classmethod
    def from_yaml(cls, path: Path) -> "Scenario":
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            return cls.model_validate(data)
        except (OSError, yaml.YAMLError, ValidationError) as exc:
            raise ConfigError(f"cannot load scenario {path}: {exc}") from exc


class ScriptedBackend(CompletionBackend):
    name = "scripted"

    def __init__(self, scenario: Scenario) -> None:
        super().__init__()
        self.scenario = scenario
        self._consumed = [False] * len(scenario.steps)
        self._cursor = 0

    @classmethod
    def from_file(cls, path: Path) -> "ScriptedBackend":
        return cls(Scenario.from_yaml(path))

    @property
    def remaining(self) -> int:
        return self._consumed.count(False)

    def _complete(self, request: CompletionRequest) -> str:
        if self.scenario.strict:
            return self._next_in_order(request)
        for index, step in enumerate(self.scenario.steps):
            if not self._consumed[index] and step.matches(request):
                self._consumed[index] = True
                logger.debug(f"scenario step {index} answered {request.label}")
                return step.response
        consumed = len(self._consumed) - self.remaining
        raise ScenarioMismatch(consumed, None, f"no unconsumed step matches label {request.label!r}")

    def _next_in_order(self, request: CompletionRequest) -> str:
        index = self._cursor
        if index >= len(self.scenario.steps):
            raise ScenarioMismatch(index, None, "scenario exhausted")
        step = self.scenario.steps[index]
        if not step.matches(request):
            raise ScenarioMismatch(index, step.contains, f"got label {request.label!r}, step wants {step.label!r}")
        self._cursor += 1
        self._consumed[index] = True
        return step.response
