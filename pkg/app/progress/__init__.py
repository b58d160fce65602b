"""
Centralized progress state: the hierarchical task list every component reads.
"""
from .manager import ProgressManager
from .markdown import parse_markdown, serialize_markdown
from .schemas import (
    ConclusionReport,
    EventKind,
    ProgressEvent,
    ProgressList,
    ReferencePointer,
    StatusUpdate,
    TaskNode,
    TaskStatus,
)
from .state import (
    apply_conclusion,
    apply_event,
    audit_trail,
    auto_complete_parents,
    is_fulfilled,
    is_legal_transition,
    merge_revision,
    next_executable,
    render_notes,
)

__all__ = [
    "ConclusionReport",
    "EventKind",
    "ProgressEvent",
    "ProgressList",
    "ProgressManager",
    "ReferencePointer",
    "StatusUpdate",
    "TaskNode",
    "TaskStatus",
    "apply_conclusion",
    "apply_event",
    "audit_trail",
    "auto_complete_parents",
    "is_fulfilled",
    "is_legal_transition",
    "merge_revision",
    "next_executable",
    "parse_markdown",
    "render_notes",
    "serialize_markdown",
]
