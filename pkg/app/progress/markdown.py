"""
Markdown task-list codec for the progress list.

Grammar (one node per line, four spaces per level):

    - [x] Title
        > criteria: free text
        > id: 2.1b
        - [ ] Child

A line without a marker is an internal objective. Ids absent from the text are
assigned from hierarchical position ("1", "1.2", ...).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from pydantic import ValidationError

from ..errors import DuplicateId, MalformedList
from .schemas import ProgressList, TaskNode, TaskStatus

INDENT = "    "

MARKERS: Dict[TaskStatus, str] = {
    TaskStatus.COMPLETED: "[x] ",
    TaskStatus.PENDING: "[ ] ",
    TaskStatus.IN_PROGRESS: "[~] ",
    TaskStatus.FAILED: "[!] ",
    TaskStatus.CANCELLED: "[-] ",
}
_MARK_TO_STATUS = {marker[1]: status for status, marker in MARKERS.items()}

_ITEM = re.compile(r"^(?P<indent>[ \t]*)- (?P<body>.*)$")
_ANNOTATION = re.compile(r"^(?P<indent>[ \t]*)> (?P<key>[a-z_]+):(?P<value>.*)$")
_MARKER = re.compile(r"^\[(?P<mark>.)\](?P<rest>.*)$")


@dataclass
class _Draft:
    line_no: int
    title: str
    status: TaskStatus
    depth: int
    explicit_id: Optional[str] = None
    criteria: Optional[str] = None
    children: List["_Draft"] = field(default_factory=list)


def _depth_of(indent: str, line_no: int) -> int:
    if "\t" in indent:
        raise MalformedList(line_no, "tabs are not allowed in indentation")
    if len(indent) % len(INDENT):
        raise MalformedList(line_no, f"indentation of {len(indent)} spaces is not a multiple of 4")
    return len(indent) // len(INDENT)


def _split_marker(body: str, line_no: int):
    match = _MARKER.match(body)
    if not match:
        return TaskStatus.PENDING, body
    mark = match.group("mark")
    rest = match.group("rest")
    if mark not in _MARK_TO_STATUS:
        raise MalformedList(line_no, f"unknown status marker '[{mark}]'")
    if not rest.startswith(" "):
        raise MalformedList(line_no, "status marker must be followed by a space")
    return _MARK_TO_STATUS[mark], rest[1:]


def parse_markdown(text: str, goal_text: str = "") -> ProgressList:
    roots: List[_Draft] = []
    stack: List[_Draft] = []

    for line_no, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.rstrip()
        if not line.strip():
            continue

        item = _ITEM.match(line)
        if item:
            depth = _depth_of(item.group("indent"), line_no)
            parent_depth = stack[-1].depth if stack else -1
            if depth > parent_depth + 1:
                raise MalformedList(line_no, "item is indented deeper than its parent allows")
            status, title = _split_marker(item.group("body"), line_no)
            title = title.strip()
            if not title:
                raise MalformedList(line_no, "item has an empty title")
            draft = _Draft(line_no=line_no, title=title, status=status, depth=depth)
            while stack and stack[-1].depth >= depth:
                stack.pop()
            (stack[-1].children if stack else roots).append(draft)
            stack.append(draft)
            continue

        annotation = _ANNOTATION.match(line)
        if annotation:
            if not stack:
                raise MalformedList(line_no, "annotation must directly follow its item")
            owner = stack[-1]
            depth = _depth_of(annotation.group("indent"), line_no)
            if depth != owner.depth + 1:
                raise MalformedList(line_no, "annotation must be indented one level below its item")
            key = annotation.group("key")
            value = annotation.group("value").strip()
            if key == "criteria":
                if owner.criteria is not None:
                    raise MalformedList(line_no, "criteria given twice")
                owner.criteria = value
            elif key == "id":
                if owner.explicit_id is not None:
                    raise MalformedList(line_no, "id given twice")
                if not value or any(ch.isspace() for ch in value):
                    raise MalformedList(line_no, "id must be a non-empty token")
                owner.explicit_id = value
            else:
                raise MalformedList(line_no, f"unknown annotation '{key}'")
            continue

        raise MalformedList(line_no, "expected a '- ' list item or a '> ' annotation")

    seen: Dict[str, int] = {}

    def _build(draft: _Draft, positional: str) -> TaskNode:
        task_id = draft.explicit_id or positional
        if task_id in seen:
            raise DuplicateId(task_id)
        seen[task_id] = draft.line_no
        children = [_build(child, f"{task_id}.{index}") for index, child in enumerate(draft.children, start=1)]
        try:
            return TaskNode(
                id=task_id,
                title=draft.title,
                status=draft.status,
                completion_criteria=draft.criteria,
                children=children,
            )
        except ValidationError as exc:
            raise MalformedList(draft.line_no, exc.errors()[0]["msg"]) from exc

    built = [_build(draft, str(index)) for index, draft in enumerate(roots, start=1)]
    return ProgressList.model_construct(roots=built, revision=0, goal_text=goal_text)


def serialize_markdown(progress: ProgressList, explicit_ids: bool = False) -> str:
    lines: List[str] = []

    def _emit(node: TaskNode, depth: int, positional: str) -> None:
        pad = INDENT * depth
        internal_pending = bool(node.children) and node.status is TaskStatus.PENDING
        marker = "" if internal_pending else MARKERS[node.status]
        lines.append(f"{pad}- {marker}{node.title}")
        if node.completion_criteria is not None:
            lines.append(f"{pad}{INDENT}> criteria: {node.completion_criteria}")
        if explicit_ids or node.id != positional:
            lines.append(f"{pad}{INDENT}> id: {node.id}")
        for index, child in enumerate(node.children, start=1):
            _emit(child, depth + 1, f"{node.id}.{index}")

    for index, root in enumerate(progress.roots, start=1):
        _emit(root, 0, str(index))
    return "\n".join(lines) + "\n" if lines else ""
