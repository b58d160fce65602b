"""
Append-only run event log.

One JSON object per line: ``{"seq": n, "type": "...", "payload": {...}}``.
Records carry no wall-clock fields, so two runs of the same scripted scenario
write byte-identical files.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

RecordType = Literal[
    "PlanInitialized",
    "PlannerDecision",
    "SubtaskDispatched",
    "ActorInstantiated",
    "ReactStep",
    "ProgressEvent",
    "ConclusionApplied",
    "ConclusionRejected",
    "RunFinished",
]


class EventRecord(BaseModel):
    seq: int
    type: RecordType
    payload: Dict[str, Any] = Field(default_factory=dict)

    def to_line(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, ensure_ascii=False) + "\n"


@dataclass
class EventLog:
    """In-memory record list, mirrored to ``path`` when one is given."""

    path: Optional[Path] = None
    records: List[EventRecord] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self) -> None:
        if self.path is not None:
            self.path = Path(self.path)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            # a fresh run always starts a fresh log
            self.path.write_text("", encoding="utf-8")

    def append(self, record_type: str, payload: Dict[str, Any]) -> EventRecord:
        with self._lock:
            record = EventRecord(seq=len(self.records) + 1, type=record_type, payload=payload)
            self.records.append(record)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(record.to_line())
        logger.debug(f"event #{record.seq} {record.type}")
        return record

    def of_type(self, record_type: str) -> List[EventRecord]:
        return [record for record in self.records if record.type == record_type]

    def text(self) -> str:
        return "".join(record.to_line() for record in self.records)


def iter_records(path: Path, after: int = 0) -> Iterator[EventRecord]:
    """Records with ``seq > after``. A torn final line (run still writing) is skipped."""
    path = Path(path)
    if not path.exists():
        return
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            if not line.endswith("\n"):
                break
            if not line.strip():
                continue
            try:
                record = EventRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValueError) as exc:
                logger.warning(f"{path}: unreadable record skipped ({exc})")
                continue
            if record.seq > after:
                yield record


def read_records(path: Path, after: int = 0) -> List[EventRecord]:
    return list(iter_records(path, after))
