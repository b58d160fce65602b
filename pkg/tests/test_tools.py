import os
import random
import shutil

import httpx
import pytest

from app.errors import ConfigError, DuplicateRegistration, SandboxViolation, ToolError
from app.progress.markdown import parse_markdown
from app.tools import (
    UPDATE_PROGRESS,
    Bundle,
    ParamSpec,
    Sandbox,
    ToolContext,
    ToolRegistry,
    ToolSpec,
    WebOptions,
    build_registry,
    describe_toolkit,
    execute,
    load_manifest,
    update_progress_tool,
)
from app.tools.builtin import default_bundles

_PARTS = ["a", "b", "notes.md", "..", ".", "link", "", "deep/er", "~", "/etc", "/tmp/escape", "x\x00y"]


@pytest.fixture
def registry() -> ToolRegistry:
    return build_registry()


def _toolkit(registry, *bundle_names):
    return registry.toolkit_for([registry.bundle(name) for name in bundle_names]) + [update_progress_tool()]


# ==================== sandbox ====================


def test_sandbox_fuzz_never_writes_outside(tmp_path, registry):
    outside = tmp_path / "outside"
    outside.mkdir()
    sandbox = Sandbox(tmp_path / "box")
    os.symlink(outside, sandbox.root / "link")
    context = ToolContext(sandbox=sandbox, task_id="1", actor_id="actor-1")
    toolkit = _toolkit(registry, "FileSystem")
    rng = random.Random(1337)

    for case in range(1200):
        path = "/".join(rng.choice(_PARTS) for _ in range(rng.randint(1, 5)))
        observation = execute(toolkit, "write_file", {"path": path, "content": f"case {case}"}, context)
        if observation.startswith("ERROR"):
            continue
        written = sandbox.resolve(path)
        assert written.is_relative_to(sandbox.root)
        assert written.read_text(encoding="utf-8") == f"case {case}"

    assert list(outside.iterdir()) == []
    assert sorted(child.name for child in tmp_path.iterdir()) == ["box", "outside"]


@pytest.mark.parametrize("path", ["../x", "a/../../x", "/etc/passwd", "link/secret", "link/../x", "bad\x00name"])
def test_sandbox_rejects_escapes(tmp_path, path):
    (tmp_path / "outside").mkdir()
    sandbox = Sandbox(tmp_path / "box")
    os.symlink(tmp_path / "outside", sandbox.root / "link")
    with pytest.raises(SandboxViolation) as info:
        sandbox.resolve(path)
    assert str(info.value) == "path outside sandbox"


def test_sandbox_allows_inner_paths(sandbox):
    assert sandbox.resolve("a/../b.txt") == sandbox.root / "b.txt"
    assert sandbox.relative(sandbox.resolve(".")) == "."
    assert sandbox.lock_for(sandbox.root / "b.txt") is sandbox.lock_for(sandbox.root / "b.txt")


# ==================== file tools ====================


def test_file_round_trip_and_listing(registry, tool_context):
    toolkit = _toolkit(registry, "FileSystem")
    assert execute(toolkit, "write_file", {"path": "plan/day1.md", "content": "Temples"}, tool_context) == (
        "wrote 7 bytes to plan/day1.md"
    )
    execute(toolkit, "write_file", {"path": "notes.txt", "content": ""}, tool_context)
    assert execute(toolkit, "read_file", {"path": "plan/day1.md"}, tool_context) == "Temples"
    assert execute(toolkit, "list_dir", {}, tool_context) == "notes.txt\nplan/"
    assert execute(toolkit, "list_dir", {"path": "plan"}, tool_context) == "day1.md"


def test_file_tools_hold_the_path_lock(registry, tool_context, monkeypatch):
    sandbox = tool_context.sandbox
    locked = []
    lock_for = sandbox.lock_for

    def recording(path):
        locked.append(sandbox.relative(path))
        return lock_for(path)

    monkeypatch.setattr(sandbox, "lock_for", recording)
    toolkit = _toolkit(registry, "FileSystem")
    execute(toolkit, "write_file", {"path": "plan/day1.md", "content": "Temples"}, tool_context)
    execute(toolkit, "read_file", {"path": "plan/day1.md"}, tool_context)
    execute(toolkit, "list_dir", {"path": "plan"}, tool_context)
    execute(toolkit, "list_dir", {}, tool_context)
    assert locked == ["plan/day1.md", "plan/day1.md", "plan", "."]


def test_file_tool_errors(registry, tool_context):
    toolkit = _toolkit(registry, "FileSystem")
    assert execute(toolkit, "read_file", {"path": "missing.txt"}, tool_context) == (
        "ERROR: file not found: missing.txt"
    )
    assert execute(toolkit, "write_file", {"path": "../x", "content": "x"}, tool_context) == (
        "ERROR: path outside sandbox"
    )
    assert execute(toolkit, "list_dir", {"path": "missing"}, tool_context).startswith("ERROR: not a directory")
    assert execute(toolkit, "read_file", {"path": "a"}, ToolContext()) == "ERROR: no sandbox configured"


# ==================== execute ====================


def test_execute_checks_arguments(registry, tool_context):
    toolkit = _toolkit(registry, "TestTools")
    assert execute(toolkit, "add", {"a": 2, "b": 3}, tool_context) == "5"
    assert execute(toolkit, "echo", {"msg": "konnichiwa"}, tool_context) == "konnichiwa"
    assert execute(toolkit, "fly", {}, tool_context) == "ERROR: unknown tool 'fly'"
    assert execute(toolkit, "add", {"a": 2}, tool_context) == (
        "ERROR: invalid arguments for add: missing required parameter 'b'"
    )
    assert execute(toolkit, "add", {"a": True, "b": 1}, tool_context) == (
        "ERROR: invalid arguments for add: parameter 'a' must be an integer"
    )
    assert execute(toolkit, "echo", {"msg": "x", "loud": True}, tool_context) == (
        "ERROR: invalid arguments for echo: unexpected parameter 'loud'"
    )
    assert execute(toolkit, "echo", ["x"], tool_context) == "ERROR: invalid arguments for echo: arguments must be an object"


def test_optional_and_boolean_parameters():
    spec = ToolSpec(
        name="toggle",
        description="Flip a switch.",
        parameters=[ParamSpec(name="on", type="boolean"), ParamSpec(name="label", required=False)],
    )
    assert spec.signature() == "toggle(on: boolean, label?: string)"
    assert spec.check_args({"on": False}) is None
    assert spec.check_args({"on": 1}) == "parameter 'on' must be a boolean"
    assert spec.check_args({"on": True, "label": 3}) == "parameter 'label' must be a string"


def test_describe_toolkit(registry):
    lines = describe_toolkit(_toolkit(registry, "TestTools")).splitlines()
    assert lines[0] == "- echo(msg: string) - Return the message unchanged."
    assert lines[1] == "- add(a: integer, b: integer) - Add two integers."
    assert lines[2].startswith(f"- {UPDATE_PROGRESS}(status: string, message: string) - ")
    assert describe_toolkit([]) == "(no tools)"


# ==================== registry ====================


def test_default_registry(registry):
    assert [bundle.name for bundle in registry.bundles] == ["WebFetch", "FileSystem", "TestTools", "Core"]
    assert registry.frozen
    assert registry.tool(UPDATE_PROGRESS) is None
    assert registry.tool("http_get").bundle == "WebFetch"


def test_shell_is_opt_in():
    assert build_registry(enable_shell=True).bundle("Shell") is not None
    assert build_registry().bundle("Shell") is None


def test_registration_errors():
    registry = ToolRegistry()
    registry.register_bundle(default_bundles()[2])
    with pytest.raises(DuplicateRegistration):
        registry.register_bundle(default_bundles()[2])
    clash = Bundle(name="MoreMath", tools=[ToolSpec(name="add", description="again")])
    with pytest.raises(DuplicateRegistration):
        registry.register_bundle(clash)
    reserved = Bundle(name="Sneaky", tools=[ToolSpec(name=UPDATE_PROGRESS, description="mine")])
    with pytest.raises(DuplicateRegistration):
        registry.register_bundle(reserved)
    orphan = Bundle(name="Orphan", tools=[ToolSpec(name="dance", description="no handler")])
    with pytest.raises(ToolError):
        registry.register_bundle(orphan)
    assert [bundle.name for bundle in registry.bundles] == ["TestTools"]

    registry.register_bundle(orphan, handlers={"dance": lambda args, ctx: "ok"})
    registry.freeze()
    with pytest.raises(ToolError):
        registry.register_bundle(Bundle(name="Late"))


def test_bundle_keywords_are_normalized():
    bundle = Bundle(name="Trains", trigger_keywords=["  Rail ", "", "Shinkansen"])
    assert bundle.trigger_keywords == ["rail", "shinkansen"]


# ==================== manifests ====================


def test_sample_manifest(samples_dir, tool_context):
    registry = build_registry([samples_dir / "bundles.yaml"])
    budget = registry.bundle("Budget")
    assert budget.trigger_keywords == ["budget", "cost", "price", "cheapest"]
    toolkit = registry.toolkit_for([budget])
    assert execute(toolkit, "sum_costs", {"a": 590, "b": 590}, tool_context) == "1180"


@pytest.mark.parametrize(
    "content",
    [
        "bundles: nope\n",
        "- just a list\n",
        "bundles:\n  - name: X\n    tools:\n      - {name: t, description: d, handler: not_a_reference}\n",
        "bundles:\n  - name: X\n    tools:\n      - {name: t, description: d, handler: 'app.missing:fn'}\n",
        "bundles:\n  - name: X\n    tools:\n      - {name: t, description: d, handler: 'app.tools.builtin:LOG_NOPE'}\n",
        "bundles:\n  - name: X\n    tools:\n      - {name: 'bad name', description: d}\n",
        "bundles: [\n",
    ],
)
def test_bad_manifests(tmp_path, content):
    path = tmp_path / "bundles.yaml"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_manifest(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(ConfigError):
        load_manifest(tmp_path / "absent.yaml")


# ==================== web ====================


@pytest.fixture
def web_context(samples_dir, sandbox):
    return ToolContext(sandbox=sandbox, web=WebOptions(mode="mock", fixtures_dir=samples_dir / "web_fixtures"))


def test_http_get_from_fixtures(registry, web_context):
    toolkit = _toolkit(registry, "WebFetch")
    page = execute(toolkit, "http_get", {"url": "https://travel.example/flights/kyoto"}, web_context)
    assert page.startswith("Kyoto flights (via KIX)")
    assert execute(toolkit, "http_get", {"url": "https://travel.example/nothing"}, web_context) == (
        "ERROR: no fixture for https://travel.example/nothing"
    )
    assert execute(toolkit, "http_get", {"url": "ftp://travel.example"}, web_context).startswith(
        "ERROR: unsupported URL scheme"
    )
    assert execute(toolkit, "http_get", {"url": "https://a.example"}, ToolContext()).startswith("ERROR: web fetch")


def test_http_get_live_truncates(registry, monkeypatch):
    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/missing":
            return httpx.Response(404)
        return httpx.Response(200, text="0123456789abcdef", headers={"content-type": "text/plain; charset=utf-8"})

    real_client = httpx.Client
    monkeypatch.setattr(httpx, "Client", lambda **kwargs: real_client(transport=httpx.MockTransport(handler), **kwargs))
    context = ToolContext(web=WebOptions(mode="live", max_bytes=10))
    toolkit = _toolkit(registry, "WebFetch")

    assert execute(toolkit, "http_get", {"url": "https://a.example/page"}, context) == (
        "0123456789\n[truncated at 10 bytes]"
    )
    assert execute(toolkit, "http_get", {"url": "https://a.example/missing"}, context) == (
        "ERROR: HTTP 404 from https://a.example/missing"
    )


# ==================== progress tools ====================


def test_inspect_progress(registry, trip_list):
    toolkit = _toolkit(registry, "Core")
    context = ToolContext(progress_reader=lambda: trip_list)
    listing = execute(toolkit, "inspect_progress", {}, context)
    assert listing.splitlines()[:3] == ["- Perform initial research", "    > id: 1", "    - [x] Research top attractions"]
    assert execute(toolkit, "inspect_progress", {}, ToolContext()) == "(no progress list available)"


def test_update_progress_validates_status(registry):
    pushed = []

    class Sink:
        def push(self, event):
            pushed.append(event)
            return event

    context = ToolContext(task_id="1", actor_id="actor-2", progress_sink=Sink())
    toolkit = [update_progress_tool()]
    assert execute(toolkit, UPDATE_PROGRESS, {"status": "Status Change", "message": "moved"}, context) == (
        "progress recorded"
    )
    assert pushed[0].status.value == "status_change"
    assert pushed[0].actor_id == "actor-2"
    assert execute(toolkit, UPDATE_PROGRESS, {"status": "victory", "message": "x"}, context) == (
        "ERROR: status must be one of: milestone, obstacle, status_change"
    )


@pytest.mark.skipif(shutil.which("echo") is None, reason="needs an echo binary")
def test_run_command_in_sandbox(tool_context):
    registry = build_registry(enable_shell=True)
    toolkit = _toolkit(registry, "Shell")
    assert execute(toolkit, "run_command", {"command": "echo hi there"}, tool_context) == "exit 0\nhi there"
    assert execute(toolkit, "run_command", {"command": "  "}, tool_context) == "ERROR: empty command"


def test_parse_markdown_used_by_inspect_round_trips(registry, trip_listing):
    plan = parse_markdown(trip_listing)
    listing = execute(_toolkit(registry, "Core"), "inspect_progress", {}, ToolContext(progress_reader=lambda: plan))
    assert parse_markdown(listing).structurally_equal(plan)
