"""
Record/replay backends.

The cache is one JSON object per line: ``{"key", "label", "response"}``. Keys
are ``CompletionRequest.cache_key()``; a key seen several times replays its
responses in recording order.
"""
from __future__ import annotations

import json
import logging
import threading
from collections import deque
from pathlib import Path
from typing import Deque, Dict, List

from ..errors import ReplayMiss
from .base import CompletionBackend, CompletionRequest

logger = logging.getLogger(__name__)


def load_cache(path: Path) -> Dict[str, List[str]]:
    entries: Dict[str, List[str]] = {}
    path = Path(path)
    if not path.exists():
        return entries
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                # an interrupted recording leaves a torn last line
                logger.warning(f"{path}:{line_no}: skipping unreadable cache record")
                continue
            entries.setdefault(record["key"], []).append(record["response"])
    return entries


class ReplayBackend(CompletionBackend):
    name = "replay"

    def __init__(self, cache_path: Path) -> None:
        super().__init__()
        self.cache_path = Path(cache_path)
        self._queues: Dict[str, Deque[str]] = {
            key: deque(responses) for key, responses in load_cache(self.cache_path).items()
        }

    def _complete(self, request: CompletionRequest) -> str:
        key = request.cache_key()
        queue = self._queues.get(key)
        if not queue:
            raise ReplayMiss(key)
        return queue.popleft()


class RecordingBackend(CompletionBackend):
    """Pass-through that appends every exchange to the replay cache."""

    name = "record"

    def __init__(self, inner: CompletionBackend, cache_path: Path) -> None:
        super().__init__()
        self.inner = inner
        self.cache_path = Path(cache_path)
        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _complete(self, request: CompletionRequest) -> str:
        response = self.inner.complete(request)
        record = {"key": request.cache_key(), "label": request.label, "response": response}
        with self._lock, self.cache_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        return response
