import os
import random
import shutil
from pathlib import Path
from typing import Callable, List, Optional

os.environ.setdefault("WAYFINDER_LOG_LEVEL", "WARNING")

import pytest

from app.config import get_settings, load_run_config
from app.integrations.base import CompletionBackend, CompletionRequest
from app.integrations.scripted import Scenario, ScenarioStep, ScriptedBackend
from app.progress.markdown import parse_markdown
from app.progress.schemas import ProgressList, TaskNode, TaskStatus
from app.tools.sandbox import Sandbox
from app.tools.schemas import ToolContext

get_settings.cache_clear()

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

TRIP_LISTING = """- Perform initial research
    - [x] Research top attractions
    - [x] Investigate transportation options
- Finalize itinerary and budget
    - [ ] Research hotel accommodations
    - [ ] Calculate total estimated budget
    - [ ] Create final itinerary document
"""

_WORDS = ["book", "hotel", "flight", "museum", "budget", "train", "list", "draft", "check", "route"]


class ListBackend(CompletionBackend):
    """Answers from a fixed list of replies, repeating the last one, and keeps every request."""

    name = "list"

    def __init__(self, replies: List[str]) -> None:
        super().__init__()
        self.replies = list(replies)
        self.requests: List[CompletionRequest] = []

    def _complete(self, request: CompletionRequest) -> str:
        self.requests.append(request)
        index = min(len(self.requests), len(self.replies)) - 1
        return self.replies[index]


@pytest.fixture
def trip_listing() -> str:
    return TRIP_LISTING


@pytest.fixture
def trip_list() -> ProgressList:
    return parse_markdown(TRIP_LISTING, goal_text="Plan a trip")


@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES


@pytest.fixture
def scripted() -> Callable[..., ScriptedBackend]:
    def _build(steps: List[dict], strict: bool = True) -> ScriptedBackend:
        return ScriptedBackend(Scenario(strict=strict, steps=[ScenarioStep(**step) for step in steps]))

    return _build


@pytest.fixture
def list_backend() -> Callable[[List[str]], ListBackend]:
    return ListBackend


@pytest.fixture
def sandbox(tmp_path) -> Sandbox:
    return Sandbox(tmp_path / "sandbox")


@pytest.fixture
def tool_context(sandbox) -> ToolContext:
    return ToolContext(sandbox=sandbox, task_id="1.1", actor_id="actor-1")


@pytest.fixture
def trip_config(tmp_path):
    """Sample trip configuration whose run directory lives under tmp_path."""

    def _load(run_name: str = "run", **overrides):
        merged = {"run_dir": str(tmp_path / run_name), **overrides}
        return load_run_config(SAMPLES / "trip_config.yaml", merged)

    return _load


@pytest.fixture
def samples_copy(tmp_path) -> Path:
    target = tmp_path / "samples"
    shutil.copytree(SAMPLES, target)
    return target


def random_tree(rng: random.Random, max_nodes: int = 50, contingencies: bool = True) -> ProgressList:
    """Random well-formed progress list with at most ``max_nodes`` nodes."""
    budget = [rng.randint(0, max_nodes)]
    statuses = list(TaskStatus)

    def _node(task_id: str, depth: int) -> TaskNode:
        budget[0] -= 1
        children: List[TaskNode] = []
        if depth < 4:
            for index in range(1, rng.randint(0, 4) + 1):
                if budget[0] <= 0:
                    break
                child_id = f"{task_id}.{index}"
                if contingencies and rng.random() < 0.1:
                    child_id += "b"
                children.append(_node(child_id, depth + 1))
        criteria: Optional[str] = None
        if rng.random() < 0.3:
            criteria = " ".join(rng.choice(_WORDS) for _ in range(3))
        title = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 4))).capitalize()
        return TaskNode(
            id=task_id,
            title=f"{title} {task_id}",
            status=rng.choice(statuses),
            completion_criteria=criteria,
            children=children,
        )

    roots = []
    index = 1
    while budget[0] > 0:
        roots.append(_node(str(index), 0))
        index += 1
    return ProgressList(roots=roots, goal_text="random goal")


@pytest.fixture
def make_tree() -> Callable[..., ProgressList]:
    return random_tree
