"""
ProgressManager - the single writer of the progress list.

Actors push events concurrently through ``push``; the planner reads immutable
snapshots and commits revisions. All writes are serialized behind one lock and
each write installs a brand-new list, so a snapshot taken earlier never sees a
later change.
"""
from __future__ import annotations

import logging
import threading
from typing import Callable, List, Optional

from .schemas import ConclusionReport, ProgressEvent, ProgressList
from .state import apply_conclusion, apply_event

logger = logging.getLogger(__name__)

# (kind, payload) - kind is "event", "conclusion" or "commit"
ProgressListener = Callable[[str, object], None]


class ProgressManager:
    def __init__(self, initial: ProgressList, listener: Optional[ProgressListener] = None):
        self._lock = threading.Lock()
        self._current = initial
        self._clock = 0
        self._listeners: List[ProgressListener] = [listener] if listener else []

    def add_listener(self, listener: ProgressListener) -> None:
        self._listeners.append(listener)

    def snapshot(self) -> ProgressList:
        with self._lock:
            return self._current

    @property
    def revision(self) -> int:
        return self.snapshot().revision

    def push(self, event: ProgressEvent) -> ProgressEvent:
        """Stamp ``event`` with the next logical time and apply it.

        Raises the progress errors of ``apply_event`` unchanged; the list is
        left as it was when that happens.
        """
        with self._lock:
            stamped = event.model_copy(update={"timestamp": self._clock + 1})
            self._current = apply_event(self._current, stamped)
            self._clock += 1
        logger.debug(f"progress event {stamped.task_id} [{stamped.status.value}] {stamped.message}")
        self._notify("event", stamped)
        return stamped

    @property
    def clock(self) -> int:
        with self._lock:
            return self._clock

    def tick(self) -> int:
        """Reserve the next logical time for a write made outside the manager."""
        with self._lock:
            self._clock += 1
            return self._clock

    def conclude(self, report: ConclusionReport) -> ProgressList:
        with self._lock:
            self._current = apply_conclusion(self._current, report, timestamp=self._clock + 1)
            self._clock += 1
            updated = self._current
        logger.info(f"conclusion applied for {report.task_id} ({report.final_status.value})")
        self._notify("conclusion", report)
        return updated

    def commit(self, revised: ProgressList) -> None:
        """Install a planner revision produced from an earlier snapshot."""
        with self._lock:
            self._current = revised
        self._notify("commit", revised)

    def _notify(self, kind: str, payload: object) -> None:
        for listener in self._listeners:
            try:
                listener(kind, payload)
            except Exception as exc:
                logger.warning(f"progress listener failed on {kind}: {exc}")
