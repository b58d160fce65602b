from __future__ import annotations

import re
from enum import Enum
from typing import Dict, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

_MARKER_LIKE = re.compile(r"^\[.\]")
_ID_PATTERN = re.compile(r"^\S+$")
_BASE_ID = re.compile(r"[a-z]+$")


class TaskStatus(str, Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    FAILED = "failed"
    CANCELLED = "cancelled"

    @property
    def terminal(self) -> bool:
        return self in _TERMINAL


_TERMINAL = {TaskStatus.COMPLETED, TaskStatus.FAILED, TaskStatus.CANCELLED}


class EventKind(str, Enum):
    MILESTONE = "milestone"
    OBSTACLE = "obstacle"
    STATUS_CHANGE = "status_change"


class ReferencePointer(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["file", "url", "record", "inline"]
    locator: str = Field(..., min_length=1)
    description: str = ""


class ProgressEvent(BaseModel):
    """Real-time update pushed by an actor (or the orchestrator) mid-task."""

    model_config = ConfigDict(frozen=True)

    task_id: str
    actor_id: str
    status: EventKind
    message: str
    # Logical sequence number stamped by the progress manager, never wall clock.
    timestamp: int = 0


class StatusUpdate(BaseModel):
    model_config = ConfigDict(frozen=True)

    task_id: str
    status: TaskStatus


class ConclusionReport(BaseModel):
    """Standardized end-of-task payload: status updates, summary, pointers."""

    task_id: Optional[str] = None
    actor_id: str = ""
    status_updates: List[StatusUpdate] = Field(default_factory=list)
    summary: str
    pointers: List[ReferencePointer] = Field(default_factory=list)
    final_status: TaskStatus

    @field_validator("summary")
    @classmethod
    def _summary_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("summary must not be empty")
        return value

    @field_validator("final_status")
    @classmethod
    def _final_is_terminal(cls, value: TaskStatus) -> TaskStatus:
        if value not in (TaskStatus.COMPLETED, TaskStatus.FAILED):
            raise ValueError("final_status must be completed or failed")
        return value


class TaskNode(BaseModel):
    id: str
    title: str
    status: TaskStatus = TaskStatus.PENDING
    completion_criteria: Optional[str] = None
    children: List["TaskNode"] = Field(default_factory=list)
    notes: List[ProgressEvent] = Field(default_factory=list)
    artifacts: List[ReferencePointer] = Field(default_factory=list)

    @field_validator("id")
    @classmethod
    def _valid_id(cls, value: str) -> str:
        if not _ID_PATTERN.match(value):
            raise ValueError("task id must be a non-empty token without whitespace")
        return value

    @field_validator("title")
    @classmethod
    def _valid_title(cls, value: str) -> str:
        value = value.strip()
        if not value or "\n" in value:
            raise ValueError("title must be a single non-empty line")
        if _MARKER_LIKE.match(value):
            raise ValueError("title must not start with a status marker")
        return value

    @field_validator("completion_criteria")
    @classmethod
    def _valid_criteria(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return None
        value = value.strip()
        if "\n" in value:
            raise ValueError("completion criteria must be a single line")
        return value or None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def base_id(self) -> str:
        """Id without trailing contingency letters ("2.1b" -> "2.1")."""
        return _BASE_ID.sub("", self.id) or self.id


class ProgressList(BaseModel):
    roots: List[TaskNode] = Field(default_factory=list)
    revision: int = 0
    goal_text: str = ""

    @model_validator(mode="after")
    def _unique_ids(self) -> "ProgressList":
        seen = set()
        for node in self.iter_nodes():
            if node.id in seen:
                raise ValueError(f"duplicate task id '{node.id}'")
            seen.add(node.id)
        return self

    def iter_nodes(self) -> Iterator[TaskNode]:
        """Depth-first, document order."""
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> List[TaskNode]:
        return [node for node in self.iter_nodes() if node.is_leaf]

    def index(self) -> Dict[str, TaskNode]:
        return {node.id: node for node in self.iter_nodes()}

    def find(self, task_id: str) -> Optional[TaskNode]:
        for node in self.iter_nodes():
            if node.id == task_id:
                return node
        return None

    def parent_map(self) -> Dict[str, Optional[TaskNode]]:
        parents: Dict[str, Optional[TaskNode]] = {}
        for root in self.roots:
            parents[root.id] = None
        for node in self.iter_nodes():
            for child in node.children:
                parents[child.id] = node
        return parents

    def structure(self) -> Tuple:
        """Comparable shape: ids, titles, statuses, criteria and child order."""

        def _shape(node: TaskNode) -> Tuple:
            return (
                node.id,
                node.title,
                node.status.value,
                node.completion_criteria,
                tuple(_shape(child) for child in node.children),
            )

        return tuple(_shape(root) for root in self.roots)

    def structurally_equal(self, other: "ProgressList") -> bool:
        return self.structure() == other.structure()


TaskNode.model_rebuild()
