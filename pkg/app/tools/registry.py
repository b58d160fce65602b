"""
Tool registry: bundles, their tools and the handlers behind them.

The registry is filled at startup (built-in bundles plus any manifest files)
and frozen before the first actor is created.
"""
from __future__ import annotations

import importlib
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import yaml
from pydantic import ValidationError

from ..errors import ConfigError, DuplicateRegistration, ToolError
from .builtin import BUILTIN_HANDLERS, UPDATE_PROGRESS_SPEC, default_bundles
from .schemas import UPDATE_PROGRESS, Bundle, Handler, Tool, ToolContext, ToolSpec, Toolkit

logger = logging.getLogger(__name__)


class ToolRegistry:
    def __init__(self) -> None:
        self._bundles: Dict[str, Bundle] = {}
        self._tools: Dict[str, Tool] = {}
        self._frozen = False

    def register_bundle(self, bundle: Bundle, handlers: Optional[Mapping[str, Handler]] = None) -> None:
        if self._frozen:
            raise ToolError("registry is frozen")
        if bundle.name in self._bundles:
            raise DuplicateRegistration(f"bundle '{bundle.name}' is already registered")

        handlers = handlers or {}
        resolved: List[Tool] = []
        seen: set = set()
        for spec in bundle.tools:
            if spec.name == UPDATE_PROGRESS:
                raise DuplicateRegistration(f"'{UPDATE_PROGRESS}' is a reserved system tool")
            if spec.name in self._tools or spec.name in seen:
                raise DuplicateRegistration(f"tool '{spec.name}' is already registered")
            handler = handlers.get(spec.name) or BUILTIN_HANDLERS.get(spec.name)
            if handler is None:
                raise ToolError(f"tool '{spec.name}' in bundle '{bundle.name}' has no handler")
            seen.add(spec.name)
            resolved.append(Tool(spec=spec, handler=handler, bundle=bundle.name))

        self._bundles[bundle.name] = bundle
        for tool in resolved:
            self._tools[tool.name] = tool
        logger.info(f"Registered bundle {bundle.name} ({len(resolved)} tools)")

    def freeze(self) -> "ToolRegistry":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def bundles(self) -> List[Bundle]:
        return list(self._bundles.values())

    @property
    def tool_names(self) -> List[str]:
        return list(self._tools)

    def bundle(self, name: str) -> Optional[Bundle]:
        return self._bundles.get(name)

    def tool(self, name: str) -> Optional[Tool]:
        return self._tools.get(name)

    def toolkit_for(self, bundles: Iterable[Bundle]) -> Toolkit:
        """Resolved tools of ``bundles`` in bundle order, then tool order."""
        return [self._tools[spec.name] for bundle in bundles for spec in bundle.tools]

    def __len__(self) -> int:
        return len(self._bundles)


def register_bundle(registry: ToolRegistry, bundle: Bundle, handlers: Optional[Mapping[str, Handler]] = None) -> None:
    registry.register_bundle(bundle, handlers)


def update_progress_tool() -> Tool:
    return Tool(spec=UPDATE_PROGRESS_SPEC, handler=BUILTIN_HANDLERS[UPDATE_PROGRESS], bundle="")


# ==================== manifests ====================


def _import_handler(reference: str) -> Handler:
    module_name, _, attr = reference.partition(":")
    if not module_name or not attr:
        raise ConfigError(f"handler '{reference}' must look like 'package.module:function'")
    try:
        module = importlib.import_module(module_name)
        handler = getattr(module, attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot import handler '{reference}': {exc}") from exc
    if not callable(handler):
        raise ConfigError(f"handler '{reference}' is not callable")
    return handler


def load_manifest(path: Path) -> List[Tuple[Bundle, Dict[str, Handler]]]:
    """Parse a bundle manifest into ``(Bundle, handlers)`` pairs."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read bundle manifest {path}: {exc}") from exc

    entries = data.get("bundles") if isinstance(data, dict) else None
    if not isinstance(entries, list):
        raise ConfigError(f"{path}: expected a top-level 'bundles' list")

    loaded = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: every bundle must be a mapping")
        handlers: Dict[str, Handler] = {}
        tools: List[Dict[str, Any]] = []
        for tool in entry.get("tools") or []:
            tool = dict(tool)
            reference = tool.pop("handler", None)
            if reference:
                handlers[tool.get("name", "")] = _import_handler(reference)
            tools.append(tool)
        try:
            bundle = Bundle(
                name=entry.get("name", ""),
                description=entry.get("description", ""),
                trigger_keywords=entry.get("keywords", entry.get("trigger_keywords", [])) or [],
                tools=[ToolSpec(**tool) for tool in tools],
            )
        except (ValidationError, TypeError) as exc:
            raise ConfigError(f"{path}: invalid bundle {entry.get('name')!r}: {exc}") from exc
        loaded.append((bundle, handlers))
    return loaded


def build_registry(
    manifests: Sequence[Path] = (),
    include_defaults: bool = True,
    enable_shell: bool = False,
) -> ToolRegistry:
    registry = ToolRegistry()
    if include_defaults:
        for bundle in default_bundles(enable_shell=enable_shell):
            registry.register_bundle(bundle)
    for manifest in manifests:
        for bundle, handlers in load_manifest(manifest):
            registry.register_bundle(bundle, handlers)
    return registry.freeze()


# ==================== toolkit use ====================


def describe_toolkit(toolkit: Toolkit) -> str:
    if not toolkit:
        return "(no tools)"
    return "\n".join(f"- {tool.spec.signature()} - {tool.spec.description}" for tool in toolkit)


def execute(toolkit: Toolkit, name: str, args: Any, context: ToolContext) -> str:
    """Run one tool call and return its observation text. Never raises."""
    tool = next((candidate for candidate in toolkit if candidate.name == name), None)
    if tool is None:
        return f"ERROR: unknown tool '{name}'"
    problem = tool.spec.check_args(args)
    if problem is not None:
        return f"ERROR: invalid arguments for {name}: {problem}"
    try:
        return tool.handler(args, context)
    except Exception as exc:
        logger.debug(f"tool {name} failed: {exc}")
        return f"ERROR: {exc}"
