"""
Text-protocol helpers shared by the planner and the actor.

Backends answer in plain text; structured content travels either inside
```-fenced blocks or as a bare JSON object somewhere in the reply.
"""
from __future__ import annotations

import json
import re
from typing import Any, Dict, List, Optional, Tuple

_FENCE = re.compile(r"^```(?P<lang>[A-Za-z0-9_-]*)[ \t]*\n(?P<body>.*?)^```[ \t]*$", re.MULTILINE | re.DOTALL)


def fenced_blocks(text: str) -> List[Tuple[str, str]]:
    """All ```-fenced blocks as (language, body) pairs, in order."""
    normalized = text.replace("\r\n", "\n")
    return [(match.group("lang").lower(), match.group("body")) for match in _FENCE.finditer(normalized)]


def render_fence(body: str, lang: str = "") -> str:
    if not body.endswith("\n"):
        body += "\n"
    return f"```{lang}\n{body}```"


def first_block(text: str, languages: Tuple[str, ...]) -> Optional[str]:
    for lang, body in fenced_blocks(text):
        if lang in languages:
            return body
    return None


def extract_json_object(text: str) -> Dict[str, Any]:
    """Find the JSON object in a reply.

    Preference order: a ```json fence, the whole reply, then the first
    decodable ``{...}`` span. Raises ValueError naming what went wrong.
    """
    candidate = first_block(text, ("json",))
    if candidate is not None:
        try:
            data = json.loads(candidate, strict=False)
        except json.JSONDecodeError as exc:
            raise ValueError(f"json block is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError("json block must hold an object")
        return data

    stripped = text.strip()
    try:
        data = json.loads(stripped, strict=False)
        if isinstance(data, dict):
            return data
    except json.JSONDecodeError:
        pass

    decoder = json.JSONDecoder(strict=False)
    for match in re.finditer(r"\{", text):
        try:
            data, _ = decoder.raw_decode(text, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(data, dict):
            return data
    raise ValueError("no JSON object found in the response")


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False)


def planner_reply(plan: Optional[str], action: Optional[Dict[str, Any]]) -> str:
    """Canonical planner reply: a ```markdown plan block then a ```json action block."""
    parts = []
    if plan is not None:
        parts.append(render_fence(plan, "markdown"))
    if action is not None:
        parts.append(render_fence(json.dumps(action, indent=2, sort_keys=True, ensure_ascii=False), "json"))
    return "\n\n".join(parts) + "\n"


def strip_fences(text: str) -> str:
    """The reply with every fenced block removed."""
    return _FENCE.sub("", text.replace("\r\n", "\n"))
