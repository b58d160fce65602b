from __future__ import annotations

from typing import Annotated, Any, Dict, List, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..planner.schemas import SubtaskSpec
from ..progress.schemas import ReferencePointer, StatusUpdate, TaskStatus
from ..tools.schemas import UPDATE_PROGRESS, Tool


class ToolCall(BaseModel):
    kind: Literal["tool"] = "tool"
    tool: str
    args: Dict[str, Any] = Field(default_factory=dict)


class Finalize(BaseModel):
    """Terminal action: the actor's draft of its conclusion report."""

    kind: Literal["final"] = "final"
    status: TaskStatus
    summary: str
    pointers: List[ReferencePointer] = Field(default_factory=list)
    status_updates: List[StatusUpdate] = Field(default_factory=list)

    @field_validator("status", mode="before")
    @classmethod
    def _lowercase(cls, value: Any) -> Any:
        return value.strip().lower() if isinstance(value, str) else value

    @field_validator("status")
    @classmethod
    def _terminal(cls, value: TaskStatus) -> TaskStatus:
        if value not in (TaskStatus.COMPLETED, TaskStatus.FAILED):
            raise ValueError("final status must be completed or failed")
        return value

    @field_validator("summary")
    @classmethod
    def _summary(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("summary must not be empty")
        return value


ActionRequest = Annotated[Union[ToolCall, Finalize], Field(discriminator="kind")]


class RejectedReply(BaseModel):
    """A reply that failed to parse, kept so the request sequence can be rebuilt."""

    raw: str
    error: str


class ReactStep(BaseModel):
    index: int
    thought: str
    action: ActionRequest
    observation: str = ""
    repairs: List[RejectedReply] = Field(default_factory=list)


class ActorInstance(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    actor_id: str
    prompt: str
    toolkit: List[Tool]
    subtask: SubtaskSpec
    memory: List[ReactStep] = Field(default_factory=list)
    step_limit: int = Field(default=20, ge=0)
    # the turn that ended the run unparsed, if any
    abandoned: List[RejectedReply] = Field(default_factory=list)

    @model_validator(mode="after")
    def _has_update_progress(self) -> "ActorInstance":
        if UPDATE_PROGRESS not in self.tool_names:
            raise ValueError(f"toolkit must include {UPDATE_PROGRESS}")
        return self

    @property
    def tool_names(self) -> List[str]:
        return [tool.name for tool in self.toolkit]

    @property
    def label(self) -> str:
        return f"actor:{self.actor_id}"
