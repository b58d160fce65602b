from __future__ import annotations

from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from ..progress.schemas import ConclusionReport, ProgressList, ReferencePointer


class SubtaskSpec(BaseModel):
    """One unit of work handed from the planner to the actor factory."""

    task_id: str
    description: str
    completion_criteria: Optional[str] = None
    context_pointers: List[ReferencePointer] = Field(default_factory=list)


class Dispatch(BaseModel):
    kind: Literal["dispatch"] = "dispatch"
    subtask: SubtaskSpec


class Finish(BaseModel):
    kind: Literal["finish"] = "finish"
    final_answer: str


class Abort(BaseModel):
    kind: Literal["abort"] = "abort"
    reason: str


PlannerAction = Annotated[Union[Dispatch, Finish, Abort], Field(discriminator="kind")]


class PlannerDecision(BaseModel):
    revised_list: ProgressList
    action: PlannerAction
    rationale: str = ""
    # raw plan text the backend proposed, before merging; None for a status-only copy
    proposed_markdown: Optional[str] = None


class PlannerState(BaseModel):
    goal: str
    plan: ProgressList
    history: List[ConclusionReport] = Field(default_factory=list)
    iteration: int = Field(default=0, ge=0)
    budget: int = Field(default=50, ge=1)

    @model_validator(mode="after")
    def _bounds(self) -> "PlannerState":
        if self.iteration > self.budget:
            raise ValueError("iteration exceeds budget")
        if len(self.history) > self.iteration:
            raise ValueError("history is longer than the number of iterations")
        return self
