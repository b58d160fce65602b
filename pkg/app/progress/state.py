"""
Pure operations on the progress list.

Every mutating operation returns a fresh list with ``revision + 1`` and leaves
its input untouched, so snapshots handed to readers never change underneath
them.
"""
from __future__ import annotations

import json
from typing import Dict, Iterable, List, Literal, Optional, Set

from ..errors import DuplicateId, IllegalTransition, UnknownTask
from .schemas import (
    ConclusionReport,
    EventKind,
    ProgressEvent,
    ProgressList,
    TaskNode,
    TaskStatus,
)

DependencyMode = Literal["strict", "free"]

_P, _R, _C, _F, _X = (
    TaskStatus.PENDING,
    TaskStatus.IN_PROGRESS,
    TaskStatus.COMPLETED,
    TaskStatus.FAILED,
    TaskStatus.CANCELLED,
)

# Pending reaches the terminal states through an implicit InProgress step.
REACHABLE: Dict[TaskStatus, Set[TaskStatus]] = {
    _P: {_R, _C, _F, _X},
    _R: {_C, _F, _X},
    _C: set(),
    _F: set(),
    _X: set(),
}


def is_legal_transition(old: TaskStatus, new: TaskStatus) -> bool:
    return new == old or new in REACHABLE[old]


# ==================== copying ====================


def clone_node(node: TaskNode) -> TaskNode:
    # notes and artifacts are frozen models, so sharing them is safe
    return TaskNode.model_construct(
        id=node.id,
        title=node.title,
        status=node.status,
        completion_criteria=node.completion_criteria,
        children=[clone_node(child) for child in node.children],
        notes=list(node.notes),
        artifacts=list(node.artifacts),
    )


def clone_list(progress: ProgressList, revision: Optional[int] = None) -> ProgressList:
    return ProgressList.model_construct(
        roots=[clone_node(root) for root in progress.roots],
        revision=progress.revision if revision is None else revision,
        goal_text=progress.goal_text,
    )


def _with_status(node: TaskNode, status: TaskStatus) -> None:
    node.status = status


# ==================== events & conclusions ====================


def apply_event(progress: ProgressList, event: ProgressEvent) -> ProgressList:
    updated = clone_list(progress, revision=progress.revision + 1)
    node = updated.find(event.task_id)
    if node is None:
        raise UnknownTask(event.task_id)
    if node.status.terminal:
        raise IllegalTransition(node.id, node.status.value, TaskStatus.IN_PROGRESS.value)
    node.notes.append(event)
    if node.status is TaskStatus.PENDING:
        _with_status(node, TaskStatus.IN_PROGRESS)
    return updated


def apply_conclusion(progress: ProgressList, report: ConclusionReport, timestamp: int = 0) -> ProgressList:
    index = progress.index()
    # validate everything before touching the copy so a rejection changes nothing
    for update in report.status_updates:
        node = index.get(update.task_id)
        if node is None:
            raise UnknownTask(update.task_id)
        if not is_legal_transition(node.status, update.status):
            raise IllegalTransition(node.id, node.status.value, update.status.value)
    if report.task_id is not None and report.task_id not in index:
        raise UnknownTask(report.task_id)

    updated = clone_list(progress, revision=progress.revision + 1)
    fresh = updated.index()
    for update in report.status_updates:
        _with_status(fresh[update.task_id], update.status)

    target: Optional[TaskNode] = None
    if report.task_id is not None:
        target = fresh[report.task_id]
    elif report.status_updates:
        target = fresh[report.status_updates[0].task_id]
    elif updated.roots:
        target = updated.roots[0]

    if target is not None:
        target.artifacts.extend(report.pointers)
        target.notes.append(
            ProgressEvent(
                task_id=target.id,
                actor_id=report.actor_id or "planner",
                status=EventKind.STATUS_CHANGE,
                message=f"conclusion ({report.final_status.value}): {report.summary}",
                timestamp=timestamp,
            )
        )
    return updated


def auto_complete_parents(progress: ProgressList) -> ProgressList:
    """Explicitly complete internal nodes whose children all completed."""
    updated = clone_list(progress, revision=progress.revision + 1)

    def _visit(node: TaskNode) -> None:
        for child in node.children:
            _visit(child)
        if node.children and not node.status.terminal:
            if all(child.status is TaskStatus.COMPLETED for child in node.children):
                _with_status(node, TaskStatus.COMPLETED)

    for root in updated.roots:
        _visit(root)
    return updated


# ==================== scheduling ====================


def _covered(node: TaskNode, siblings: Iterable[TaskNode]) -> bool:
    return any(
        other.id != node.id and other.base_id == node.base_id and other.status is TaskStatus.COMPLETED
        for other in siblings
    )


def _has_contingency(node: TaskNode, siblings: Iterable[TaskNode]) -> bool:
    return any(
        other.id != node.id
        and other.base_id == node.base_id
        and other.status not in (TaskStatus.FAILED, TaskStatus.CANCELLED)
        for other in siblings
    )


def _settled(node: TaskNode, siblings: List[TaskNode]) -> bool:
    """Done well enough that later siblings may start."""
    if node.status in (TaskStatus.COMPLETED, TaskStatus.CANCELLED):
        return True
    if node.status is TaskStatus.FAILED:
        # a failed step is passable once a retry sibling ("2.1b") exists;
        # the retry itself then gates everything after it
        return _has_contingency(node, siblings)
    if node.children:
        return all(_settled(child, node.children) for child in node.children)
    return False


def next_executable(progress: ProgressList, mode: DependencyMode = "strict") -> Optional[TaskNode]:
    if mode == "free":
        for node in progress.iter_nodes():
            if node.is_leaf and node.status is TaskStatus.PENDING:
                return node
        return None

    def _search(nodes: List[TaskNode]) -> Optional[TaskNode]:
        for node in nodes:
            if node.is_leaf:
                if node.status is TaskStatus.PENDING:
                    return node
            elif not node.status.terminal:
                found = _search(node.children)
                if found is not None:
                    return found
            if not _settled(node, nodes):
                return None
        return None

    return _search(progress.roots)


def is_fulfilled(progress: ProgressList) -> bool:
    def _ok(nodes: List[TaskNode]) -> bool:
        for node in nodes:
            if node.children:
                if not _ok(node.children):
                    return False
                continue
            if not node.status.terminal:
                return False
            if node.status is TaskStatus.FAILED and not _covered(node, nodes):
                return False
        return True

    return _ok(progress.roots)


# ==================== strategic revision ====================


def merge_revision(old: ProgressList, proposed: ProgressList) -> ProgressList:
    seen: Set[str] = set()
    for node in proposed.iter_nodes():
        if node.id in seen:
            raise DuplicateId(node.id)
        seen.add(node.id)

    old_index = old.index()
    merged = clone_list(proposed, revision=old.revision + 1)
    merged.goal_text = old.goal_text

    for node in merged.iter_nodes():
        previous = old_index.get(node.id)
        if previous is None:
            continue
        if previous.status.terminal or not is_legal_transition(previous.status, node.status):
            _with_status(node, previous.status)
        node.notes[:0] = [note for note in previous.notes if note not in node.notes]
        node.artifacts[:0] = [pointer for pointer in previous.artifacts if pointer not in node.artifacts]

    # history is never lost: completed work dropped by the proposal comes back
    surviving = merged.index()
    old_parents = old.parent_map()

    def _keep_subtree(node: TaskNode) -> TaskNode:
        copy = clone_node(node)
        copy.children[:] = [_keep_subtree(child) for child in node.children if child.id not in surviving]
        return copy

    def _rescue(node: TaskNode) -> None:
        if node.id in surviving:
            for child in node.children:
                _rescue(child)
            return
        if node.status is TaskStatus.COMPLETED:
            restored = _keep_subtree(node)
            ancestor = old_parents.get(node.id)
            while ancestor is not None and ancestor.id not in surviving:
                ancestor = old_parents.get(ancestor.id)
            if ancestor is None:
                merged.roots.append(restored)
            else:
                surviving[ancestor.id].children.append(restored)
            for restored_node in _iter_subtree(restored):
                surviving[restored_node.id] = restored_node
            return
        for child in node.children:
            _rescue(child)

    for root in old.roots:
        _rescue(root)
    return merged


def _iter_subtree(node: TaskNode):
    yield node
    for child in node.children:
        yield from _iter_subtree(child)


# ==================== rendering ====================


def render_notes(progress: ProgressList, limit_per_task: int = 3) -> str:
    lines: List[str] = []
    for node in progress.iter_nodes():
        for note in node.notes[-limit_per_task:]:
            lines.append(f"- {node.id} [{note.status.value}] {note.message}")
    return "\n".join(lines) if lines else "(no progress notes)"


def audit_trail(progress: ProgressList) -> str:
    """Every note as one JSON object per line, in timestamp order."""
    notes = [note for node in progress.iter_nodes() for note in node.notes]
    notes.sort(key=lambda note: note.timestamp)
    return "".join(json.dumps(note.model_dump(mode="json"), sort_keys=True) + "\n" for note in notes)
