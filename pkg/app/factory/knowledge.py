"""
Knowledge base: a directory of Markdown/text snippets with YAML front-matter.

    ---
    tags: [travel, hotels]
    ---
    Book refundable rates when plans may still change.
"""
from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from ..planner.schemas import SubtaskSpec
from .schemas import KnowledgeBase, KnowledgeEntry

logger = logging.getLogger(__name__)

_WORD = re.compile(r"[a-z0-9]+")


def split_front_matter(content: str) -> Tuple[Dict[str, Any], str]:
    """Return ``(front_matter, body)``; ``({}, content)`` when there is none."""
    parts = content.split("---", 2)
    if len(parts) < 3 or parts[0].strip():
        return {}, content
    try:
        front = yaml.safe_load(parts[1])
    except yaml.YAMLError:
        return {}, content
    if not isinstance(front, dict):
        return {}, content
    return front, parts[2].lstrip("\n")


def load_knowledge_base(directory: Optional[Path]) -> KnowledgeBase:
    if directory is None:
        return KnowledgeBase()
    directory = Path(directory)
    if not directory.is_dir():
        logger.warning(f"knowledge directory {directory} does not exist; using an empty knowledge base")
        return KnowledgeBase()

    entries: List[KnowledgeEntry] = []
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in (".md", ".txt") or not path.is_file():
            continue
        front, body = split_front_matter(path.read_text(encoding="utf-8"))
        tags = front.get("tags")
        if not tags:
            logger.warning(f"{path.name}: no 'tags' front-matter, skipped")
            continue
        if isinstance(tags, str):
            tags = [tags]
        entries.append(KnowledgeEntry(tags=tags, snippet=body.strip(), source=path.name))
    logger.info(f"Loaded {len(entries)} knowledge entries from {directory}")
    return KnowledgeBase(entries=entries)


def keywords_of(text: str) -> set:
    return set(_WORD.findall(text.lower()))


def retrieve_knowledge(subtask: SubtaskSpec, kb: KnowledgeBase, limit: int) -> List[str]:
    """Snippets whose tags overlap the subtask description's words, best overlap first.

    Ties keep knowledge-base order.
    """
    if limit <= 0 or not kb.entries:
        return []
    words = keywords_of(subtask.description)
    scored = []
    for position, entry in enumerate(kb.entries):
        overlap = len(words.intersection(entry.tags))
        if overlap:
            scored.append((-overlap, position, entry.snippet))
    scored.sort()
    return [snippet for _, _, snippet in scored[:limit]]
