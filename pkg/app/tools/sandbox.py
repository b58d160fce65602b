"""
Filesystem sandbox: every path a tool touches must resolve under one root.
"""
from __future__ import annotations

import threading
from pathlib import Path
from typing import Dict

from ..errors import SandboxViolation


class Sandbox:
    def __init__(self, root: Path) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        self.root = root.resolve()
        self._locks: Dict[Path, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def resolve(self, relative: str) -> Path:
        """Map a tool-supplied path to an absolute path inside the root.

        Symlinks are followed before the containment check, so a link that
        points outside the root is rejected like ``..`` would be.
        """
        if not isinstance(relative, str) or "\x00" in relative:
            raise SandboxViolation(str(relative))
        try:
            candidate = (self.root / relative).resolve()
        except (OSError, RuntimeError, ValueError) as exc:
            raise SandboxViolation(relative) from exc
        if not candidate.is_relative_to(self.root):
            raise SandboxViolation(relative)
        return candidate

    def relative(self, path: Path) -> str:
        rel = path.relative_to(self.root).as_posix()
        return rel or "."

    def lock_for(self, path: Path) -> threading.Lock:
        """One lock per resolved path; filesystem tools hold it while they run."""
        with self._locks_guard:
            lock = self._locks.get(path)
            if lock is None:
                lock = self._locks[path] = threading.Lock()
            return lock
