"""
Tool bundles, the registry and the built-in tool implementations.
"""
from .registry import (
    ToolRegistry,
    build_registry,
    describe_toolkit,
    execute,
    load_manifest,
    register_bundle,
    update_progress_tool,
)
from .sandbox import Sandbox
from .schemas import UPDATE_PROGRESS, Bundle, ParamSpec, Tool, ToolContext, Toolkit, ToolSpec, WebOptions

__all__ = [
    "UPDATE_PROGRESS",
    "Bundle",
    "ParamSpec",
    "Sandbox",
    "Tool",
    "ToolContext",
    "ToolRegistry",
    "ToolSpec",
    "Toolkit",
    "WebOptions",
    "build_registry",
    "describe_toolkit",
    "execute",
    "load_manifest",
    "register_bundle",
    "update_progress_tool",
]
