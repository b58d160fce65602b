"""
Built-in tool handlers and the default bundles that expose them.

Handlers raise on failure; ``registry.execute`` turns any exception into an
``ERROR:`` observation for the actor.
"""
from __future__ import annotations

import logging
import shlex
import subprocess
from pathlib import Path
from typing import Any, Dict, List

import httpx
import yaml

from ..progress.markdown import serialize_markdown
from ..progress.schemas import EventKind, ProgressEvent
from .sandbox import Sandbox
from .schemas import UPDATE_PROGRESS, Bundle, Handler, ParamSpec, ToolContext, ToolSpec

logger = logging.getLogger(__name__)


# ==================== FileSystem ====================


def _sandbox(ctx: ToolContext) -> Sandbox:
    if ctx.sandbox is None:
        raise RuntimeError("no sandbox configured")
    return ctx.sandbox


def read_file(args: Dict[str, Any], ctx: ToolContext) -> str:
    sandbox = _sandbox(ctx)
    path = sandbox.resolve(args["path"])
    with sandbox.lock_for(path):
        if not path.is_file():
            raise FileNotFoundError(f"file not found: {args['path']}")
        return path.read_text(encoding="utf-8")


def write_file(args: Dict[str, Any], ctx: ToolContext) -> str:
    sandbox = _sandbox(ctx)
    path = sandbox.resolve(args["path"])
    if path == sandbox.root:
        raise IsADirectoryError("cannot write to the sandbox root")
    content = args["content"]
    with sandbox.lock_for(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
    return f"wrote {len(content.encode('utf-8'))} bytes to {sandbox.relative(path)}"


def list_dir(args: Dict[str, Any], ctx: ToolContext) -> str:
    sandbox = _sandbox(ctx)
    path = sandbox.resolve(args.get("path", "."))
    with sandbox.lock_for(path):
        if not path.is_dir():
            raise NotADirectoryError(f"not a directory: {args.get('path', '.')}")
        entries = sorted(child.name + ("/" if child.is_dir() else "") for child in path.iterdir())
    return "\n".join(entries) if entries else "(empty)"


# ==================== WebFetch ====================


def _fixture_index(fixtures_dir: Path) -> Dict[str, str]:
    index_path = fixtures_dir / "index.yaml"
    if not index_path.is_file():
        return {}
    data = yaml.safe_load(index_path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{index_path} must map URLs to file names")
    return {str(url): str(name) for url, name in data.items()}


def http_get(args: Dict[str, Any], ctx: ToolContext) -> str:
    url = args["url"].strip()
    if not url.startswith(("http://", "https://")):
        raise ValueError(f"unsupported URL scheme: {url}")

    if ctx.web.mode == "mock":
        if ctx.web.fixtures_dir is None:
            raise LookupError("web fetch is in mock mode but no fixtures directory is configured")
        name = _fixture_index(ctx.web.fixtures_dir).get(url)
        if name is None:
            raise LookupError(f"no fixture for {url}")
        return (ctx.web.fixtures_dir / name).read_text(encoding="utf-8")

    logger.info(f"http_get {url}")
    chunks: List[bytes] = []
    size = 0
    with httpx.Client(timeout=ctx.web.timeout, follow_redirects=True) as client:
        with client.stream("GET", url) as response:
            if response.status_code >= 400:
                raise RuntimeError(f"HTTP {response.status_code} from {url}")
            for chunk in response.iter_bytes():
                chunks.append(chunk)
                size += len(chunk)
                if size >= ctx.web.max_bytes:
                    break
            encoding = response.encoding or "utf-8"
    body = b"".join(chunks)[: ctx.web.max_bytes]
    text = body.decode(encoding, errors="replace")
    if size >= ctx.web.max_bytes:
        text += f"\n[truncated at {ctx.web.max_bytes} bytes]"
    return text


# ==================== TestTools ====================


def echo(args: Dict[str, Any], ctx: ToolContext) -> str:
    return args["msg"]


def add(args: Dict[str, Any], ctx: ToolContext) -> str:
    return str(args["a"] + args["b"])


# ==================== Shell (opt-in) ====================


def run_command(args: Dict[str, Any], ctx: ToolContext) -> str:
    argv = shlex.split(args["command"])
    if not argv:
        raise ValueError("empty command")
    completed = subprocess.run(
        argv,
        cwd=_sandbox(ctx).root,
        capture_output=True,
        text=True,
        timeout=ctx.command_timeout,
        check=False,
    )
    output = (completed.stdout + completed.stderr).rstrip()
    return f"exit {completed.returncode}\n{output}" if output else f"exit {completed.returncode}"


# ==================== Core / system ====================


def inspect_progress(args: Dict[str, Any], ctx: ToolContext) -> str:
    if ctx.progress_reader is None:
        return "(no progress list available)"
    return serialize_markdown(ctx.progress_reader(), explicit_ids=True) or "(empty progress list)"


def update_progress(args: Dict[str, Any], ctx: ToolContext) -> str:
    if ctx.progress_sink is None:
        raise RuntimeError("no progress sink attached")
    kind = args["status"].strip().lower().replace(" ", "_")
    try:
        status = EventKind(kind)
    except ValueError:
        allowed = ", ".join(item.value for item in EventKind)
        raise ValueError(f"status must be one of: {allowed}") from None
    ctx.progress_sink.push(
        ProgressEvent(task_id=ctx.task_id, actor_id=ctx.actor_id, status=status, message=args["message"])
    )
    return "progress recorded"


UPDATE_PROGRESS_SPEC = ToolSpec(
    name=UPDATE_PROGRESS,
    description="Report a milestone, obstacle or status change on your task to the shared progress list.",
    parameters=[
        ParamSpec(name="status", type="string", description="milestone | obstacle | status_change"),
        ParamSpec(name="message", type="string", description="what happened"),
    ],
)

BUILTIN_HANDLERS: Dict[str, Handler] = {
    "read_file": read_file,
    "write_file": write_file,
    "list_dir": list_dir,
    "http_get": http_get,
    "echo": echo,
    "add": add,
    "run_command": run_command,
    "inspect_progress": inspect_progress,
    UPDATE_PROGRESS: update_progress,
}


def _path_param(required: bool = True) -> ParamSpec:
    return ParamSpec(name="path", type="string", required=required, description="path relative to the sandbox root")


def default_bundles(enable_shell: bool = False) -> List[Bundle]:
    bundles = [
        Bundle(
            name="WebFetch",
            description="Fetch pages from the web.",
            trigger_keywords=[
                "web", "search", "research", "http", "url", "website",
                "browse", "online", "fetch", "look up",
            ],
            tools=[
                ToolSpec(
                    name="http_get",
                    description="Fetch a URL with HTTP GET and return the body as text.",
                    parameters=[ParamSpec(name="url", type="string", description="absolute http(s) URL")],
                ),
            ],
        ),
        Bundle(
            name="FileSystem",
            description="Read and write files inside the sandbox.",
            trigger_keywords=["file", "directory", "folder", "document", "save", "write", "read"],
            tools=[
                ToolSpec(name="read_file", description="Read a UTF-8 text file.", parameters=[_path_param()]),
                ToolSpec(
                    name="write_file",
                    description="Create or overwrite a UTF-8 text file.",
                    parameters=[_path_param(), ParamSpec(name="content", type="string", description="file content")],
                ),
                ToolSpec(
                    name="list_dir",
                    description="List the entries of a directory.",
                    parameters=[_path_param(required=False)],
                ),
            ],
        ),
        Bundle(
            name="TestTools",
            description="Small deterministic helpers.",
            trigger_keywords=["echo", "add", "sum", "calculate", "arithmetic", "test"],
            tools=[
                ToolSpec(
                    name="echo",
                    description="Return the message unchanged.",
                    parameters=[ParamSpec(name="msg", type="string")],
                ),
                ToolSpec(
                    name="add",
                    description="Add two integers.",
                    parameters=[ParamSpec(name="a", type="integer"), ParamSpec(name="b", type="integer")],
                ),
            ],
        ),
        Bundle(
            name="Core",
            description="Read-only view of the shared progress list.",
            tools=[
                ToolSpec(
                    name="inspect_progress",
                    description="Show the current progress list with task ids and statuses.",
                ),
            ],
        ),
    ]
    if enable_shell:
        bundles.append(
            Bundle(
                name="Shell",
                description="Run commands inside the sandbox directory.",
                trigger_keywords=["shell", "command", "terminal", "script"],
                tools=[
                    ToolSpec(
                        name="run_command",
                        description="Run a command (no shell expansion) and return its exit code and output.",
                        parameters=[ParamSpec(name="command", type="string")],
                    ),
                ],
            )
        )
    return bundles
