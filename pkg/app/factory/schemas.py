from __future__ import annotations

from typing import Dict, List

from pydantic import BaseModel, Field, field_validator


class KnowledgeEntry(BaseModel):
    tags: List[str] = Field(default_factory=list)
    snippet: str
    source: str = ""

    @field_validator("tags")
    @classmethod
    def _lower_tags(cls, value: List[str]) -> List[str]:
        return sorted({str(tag).strip().lower() for tag in value if str(tag).strip()})


class KnowledgeBase(BaseModel):
    entries: List[KnowledgeEntry] = Field(default_factory=list)


class ActorBlueprint(BaseModel):
    """Everything the factory decided for one subtask, plus the composed prompt."""

    persona: str
    bundle_names: List[str] = Field(default_factory=list)
    knowledge: List[str] = Field(default_factory=list)
    environment: Dict[str, str] = Field(default_factory=dict)
    output_format: str
    composed_prompt: str
