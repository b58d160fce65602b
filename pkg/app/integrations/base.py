"""
Uniform completion interface shared by every cognitive backend.
"""
from __future__ import annotations

import hashlib
import json
from abc import ABC, abstractmethod
from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class ChatMessage(BaseModel):
    role: Literal["system", "user", "assistant"]
    content: str


class CompletionRequest(BaseModel):
    messages: List[ChatMessage] = Field(default_factory=list)
    # "planner", "factory" or "actor:<actor id>"
    label: str
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None

    def latest_user(self) -> str:
        for message in reversed(self.messages):
            if message.role == "user":
                return message.content
        return ""

    def cache_key(self) -> str:
        """Content hash of label and messages; decoding parameters are left out."""
        payload = json.dumps(
            {"label": self.label, "messages": [[m.role, m.content] for m in self.messages]},
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CompletionBackend(ABC):
    name = "backend"

    def __init__(self) -> None:
        self.call_count = 0

    def complete(self, request: CompletionRequest) -> str:
        self.call_count += 1
        return self._complete(request)

    @abstractmethod
    def _complete(self, request: CompletionRequest) -> str:
        ...


def complete(backend: CompletionBackend, request: CompletionRequest) -> str:
    return backend.complete(request)


def ask(backend: CompletionBackend, label: str, system: str, user: str) -> str:
    """Single-turn helper used by the planner and the factory."""
    return backend.complete(
        CompletionRequest(
            label=label,
            messages=[ChatMessage(role="system", content=system), ChatMessage(role="user", content=user)],
        )
    )
