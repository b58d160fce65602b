from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Protocol

from pydantic import BaseModel, Field, field_validator

from ..progress.schemas import ProgressEvent, ProgressList
from .sandbox import Sandbox

UPDATE_PROGRESS = "Update_Progress"

_TOOL_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

ParamType = Literal["string", "integer", "boolean"]


class ParamSpec(BaseModel):
    name: str
    type: ParamType = "string"
    required: bool = True
    description: str = ""


class ToolSpec(BaseModel):
    name: str
    description: str
    parameters: List[ParamSpec] = Field(default_factory=list)

    @field_validator("name")
    @classmethod
    def _identifier(cls, value: str) -> str:
        if not _TOOL_NAME.match(value):
            raise ValueError(f"tool name '{value}' must be an identifier")
        return value

    @field_validator("parameters")
    @classmethod
    def _unique_params(cls, value: List[ParamSpec]) -> List[ParamSpec]:
        names = [param.name for param in value]
        if len(names) != len(set(names)):
            raise ValueError("parameter names must be unique")
        return value

    def signature(self) -> str:
        parts = []
        for param in self.parameters:
            suffix = "" if param.required else "?"
            parts.append(f"{param.name}{suffix}: {param.type}")
        return f"{self.name}({', '.join(parts)})"

    def check_args(self, args: Any) -> Optional[str]:
        """Return a description of the first schema violation, or None."""
        if not isinstance(args, dict):
            return "arguments must be an object"
        known = {param.name: param for param in self.parameters}
        for key in args:
            if key not in known:
                return f"unexpected parameter '{key}'"
        for param in self.parameters:
            if param.name not in args:
                if param.required:
                    return f"missing required parameter '{param.name}'"
                continue
            value = args[param.name]
            if param.type == "string" and not isinstance(value, str):
                return f"parameter '{param.name}' must be a string"
            if param.type == "integer" and (isinstance(value, bool) or not isinstance(value, int)):
                return f"parameter '{param.name}' must be an integer"
            if param.type == "boolean" and not isinstance(value, bool):
                return f"parameter '{param.name}' must be a boolean"
        return None


class Bundle(BaseModel):
    name: str
    description: str = ""
    trigger_keywords: List[str] = Field(default_factory=list)
    tools: List[ToolSpec] = Field(default_factory=list)

    @field_validator("trigger_keywords")
    @classmethod
    def _clean_keywords(cls, value: List[str]) -> List[str]:
        return [keyword.strip().lower() for keyword in value if keyword.strip()]


class ProgressSink(Protocol):
    def push(self, event: ProgressEvent) -> Any:
        ...


@dataclass
class WebOptions:
    mode: Literal["mock", "live"] = "mock"
    fixtures_dir: Optional[Path] = None
    timeout: float = 10.0
    max_bytes: int = 200_000


@dataclass
class ToolContext:
    """What a running tool may see: the sandbox, its caller and the progress hooks."""

    sandbox: Optional[Sandbox] = None
    task_id: str = ""
    actor_id: str = ""
    progress_sink: Optional[ProgressSink] = None
    progress_reader: Optional[Callable[[], ProgressList]] = None
    web: WebOptions = field(default_factory=WebOptions)
    command_timeout: float = 30.0


Handler = Callable[[Dict[str, Any], ToolContext], str]


@dataclass(frozen=True)
class Tool:
    spec: ToolSpec
    handler: Handler
    bundle: str = ""

    @property
    def name(self) -> str:
        return self.spec.name


Toolkit = List[Tool]
