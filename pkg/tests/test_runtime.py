import json

import pytest
import yaml

from app.errors import ScenarioMismatch
from app.progress.markdown import parse_markdown
from app.progress.schemas import TaskStatus
from app.progress.state import audit_trail
from app.services.orchestrator import EXIT_CODES, Orchestrator, replay, run
from app.storage.event_log import read_records


def _types(records):
    return [record.type for record in records]


def _failure_scenario(samples_dir):
    return {"backend": {"scenario": str(samples_dir / "trip_failure_scenario.yaml")}}


# ==================== dynamic runs ====================


def test_trip_all_subtasks_succeed(trip_config):
    result = run(trip_config())

    assert result.status == "fulfilled"
    assert result.exit_code == 0
    assert result.answer == "Flights and hotel booked; itinerary in itinerary.md."
    metrics = result.metrics
    assert metrics.subtasks_dispatched == 5
    assert metrics.actors_instantiated == 5
    assert metrics.failures_observed == 0
    assert metrics.replans == 0
    assert metrics.total_backend_calls == 15
    assert metrics.fulfilled

    plan = parse_markdown(result.final_markdown)
    assert all(leaf.status is TaskStatus.COMPLETED for leaf in plan.leaves())
    assert (result.run_dir / "sandbox" / "itinerary.md").read_text(encoding="utf-8").startswith("Day 1: arrive KIX")
    assert (result.run_dir / "progress.md").read_text(encoding="utf-8") == result.final_markdown
    assert (result.run_dir / "config.yaml").is_file()

    records = read_records(result.run_dir / "events.jsonl")
    assert _types(records).count("PlannerDecision") == 6
    assert _types(records)[0] == "PlanInitialized"
    assert _types(records)[-1] == "RunFinished"


def test_trip_blueprints(trip_config):
    result = run(trip_config())
    records = read_records(result.run_dir / "events.jsonl")
    blueprints = {record.payload["task_id"]: record.payload for record in records if record.type == "ActorInstantiated"}

    assert blueprints["1.1"]["bundle_names"] == ["WebFetch"]
    assert blueprints["2.1"]["bundle_names"] == ["Budget"]
    assert blueprints["2.2"]["bundle_names"] == ["Core"]
    assert blueprints["2.3"]["bundle_names"] == ["FileSystem"]
    assert blueprints["1.1"]["knowledge"][0].startswith("Kyoto has no airport")
    assert blueprints["1.1"]["environment"] == {"currency": "EUR", "destination": "Kyoto", "travellers": "2"}
    assert blueprints["1.1"]["persona"] == "A specialist responsible for: Research flights to Kyoto"


def test_failure_triggers_contingency(trip_config, samples_dir):
    result = run(trip_config(**_failure_scenario(samples_dir)))

    assert result.status == "fulfilled"
    metrics = result.metrics
    assert metrics.subtasks_dispatched == 6
    assert metrics.actors_instantiated == 6
    assert metrics.failures_observed == 1
    assert metrics.replans == 1
    assert metrics.total_backend_calls == 17

    plan = parse_markdown(result.final_markdown)
    assert plan.find("2.1").status is TaskStatus.FAILED
    assert plan.find("2.1b").status is TaskStatus.COMPLETED
    assert [node.title for node in plan.find("2").children][:2] == [
        "Book the cheapest flight",
        "Book an alternative flight via Osaka Itami",
    ]

    records = read_records(result.run_dir / "events.jsonl")
    decisions = [record for record in records if record.type == "PlannerDecision"]
    assert len(decisions) == 7
    assert [record.payload["replanned"] for record in decisions].count(True) == 1
    assert decisions[3].payload["action"]["subtask"]["task_id"] == "2.1b"
    obstacles = [
        record.payload for record in records if record.type == "ProgressEvent" and record.payload["status"] == "obstacle"
    ]
    assert obstacles == [
        {
            "actor_id": "actor-3",
            "message": "Both flights are sold out for the travel dates",
            "status": "obstacle",
            "task_id": "2.1",
            "timestamp": 6,
        }
    ]


def test_failure_history_reaches_the_planner(trip_config, samples_dir, monkeypatch):
    orchestrator = Orchestrator(trip_config(**_failure_scenario(samples_dir)))
    prompts = []
    complete = orchestrator.backend.complete

    def spy(request):
        if request.label == "planner":
            prompts.append(request.latest_user())
        return complete(request)

    monkeypatch.setattr(orchestrator.backend, "complete", spy)
    orchestrator.run()

    fourth = next(prompt for prompt in prompts if "Iteration: 4 of 20" in prompt)
    assert "- [2.1] failed (actor-3): No seats left on either flight." in fourth
    assert "- 2.1 [obstacle] Both flights are sold out for the travel dates" in fourth
    assert "- [!] Book the cheapest flight" in fourth


def test_static_baseline_cannot_recover(trip_config, samples_dir):
    result = run(trip_config(mode="static-baseline", **_failure_scenario(samples_dir)))

    assert result.status == "unfulfilled"
    assert result.exit_code == 1
    metrics = result.metrics
    assert metrics.subtasks_dispatched == 5
    assert metrics.failures_observed == 1
    assert metrics.replans == 0
    assert metrics.total_backend_calls == 9
    assert not metrics.fulfilled
    assert "[2.1] No seats left on either flight." in result.answer

    records = read_records(result.run_dir / "events.jsonl")
    assert "PlannerDecision" not in _types(records)
    first_conclusion = _types(records).index("ConclusionApplied")
    assert _types(records)[first_conclusion:].count("SubtaskDispatched") == 0


def test_budget_exhausted(trip_config):
    result = run(trip_config(planner_budget=2))
    assert result.status == "budget_exhausted"
    assert result.exit_code == EXIT_CODES["budget_exhausted"] == 3
    assert result.metrics.subtasks_dispatched == 2
    assert result.metrics.total_backend_calls == 6
    assert "budget of 2" in result.reason


def test_planner_abort(trip_config, tmp_path):
    scenario = tmp_path / "abort.yaml"
    scenario.write_text(
        "steps:\n"
        "  - label: planner\n"
        "    response: \"- [ ] Only step\\n\"\n"
        "  - label: planner\n"
        "    response: '{\"action\": \"abort\", \"reason\": \"no flights in April\"}'\n",
        encoding="utf-8",
    )
    result = run(trip_config(backend={"scenario": str(scenario)}))
    assert result.status == "aborted"
    assert result.exit_code == 2
    assert result.reason == "no flights in April"
    assert result.metrics.subtasks_dispatched == 0


def test_unusable_initial_plan_aborts(trip_config, tmp_path):
    scenario = tmp_path / "noplan.yaml"
    scenario.write_text(
        "steps:\n"
        "  - label: planner\n"
        "    response: I cannot plan this.\n"
        "  - label: planner\n"
        "    response: Still no plan.\n",
        encoding="utf-8",
    )
    result = run(trip_config(backend={"scenario": str(scenario)}))
    assert result.status == "aborted"
    assert result.metrics.total_backend_calls == 2
    assert result.final_markdown == ""


def test_strict_scenario_mismatch_is_logged(trip_config, tmp_path):
    scenario = tmp_path / "strict.yaml"
    scenario.write_text("strict: true\nsteps:\n  - label: 'actor:*'\n    response: hi\n", encoding="utf-8")
    config = trip_config(backend={"scenario": str(scenario)})
    with pytest.raises(ScenarioMismatch):
        run(config)
    records = read_records(config.run_dir / "events.jsonl")
    assert records[-1].type == "RunFinished"
    assert records[-1].payload["status"] == "aborted"
    assert records[-1].payload["reason"].startswith("backend error")


# ==================== log properties ====================


def test_actors_run_one_at_a_time(trip_config, samples_dir):
    result = run(trip_config(**_failure_scenario(samples_dir)))
    records = read_records(result.run_dir / "events.jsonl")

    open_task = None
    actor_ids = []
    for record in records:
        if record.type == "SubtaskDispatched":
            assert open_task is None
            open_task = record.payload["subtask"]["task_id"]
        elif record.type == "ActorInstantiated":
            actor_ids.append(record.payload["actor_id"])
        elif record.type == "ReactStep":
            assert record.payload["task_id"] == open_task
        elif record.type == "ConclusionApplied":
            assert record.payload["report"]["task_id"] == open_task
            open_task = None
    assert open_task is None
    assert actor_ids == [f"actor-{n}" for n in range(1, 7)]
    assert _types(records).count("SubtaskDispatched") == _types(records).count("ConclusionApplied")
    assert [record.seq for record in records] == list(range(1, len(records) + 1))


def test_logical_clock_covers_events_and_conclusions(trip_config, samples_dir):
    result = run(trip_config(**_failure_scenario(samples_dir)))
    records = read_records(result.run_dir / "events.jsonl")

    stamps = []
    for record in records:
        if record.type == "ProgressEvent":
            stamps.append(record.payload["timestamp"])
        elif record.type == "ConclusionApplied":
            stamps.append(record.payload["timestamp"])
    assert stamps == sorted(stamps)
    assert len(set(stamps)) == len(stamps)

    replayed = replay(records)
    trail = [json.loads(line)["timestamp"] for line in audit_trail(replayed.plan).splitlines()]
    assert sorted(trail) == sorted(stamps)
    assert 0 not in trail


def test_runs_are_deterministic(trip_config, samples_dir, tmp_path):
    first = run(trip_config("first", **_failure_scenario(samples_dir)))
    second = run(trip_config("second", **_failure_scenario(samples_dir)))

    log_one = (first.run_dir / "events.jsonl").read_bytes()
    assert log_one == (second.run_dir / "events.jsonl").read_bytes()
    assert (first.run_dir / "progress.md").read_bytes() == (second.run_dir / "progress.md").read_bytes()
    assert str(tmp_path).encode("utf-8") not in log_one


@pytest.mark.parametrize("mode", ["dynamic", "static-baseline"])
def test_replay_rebuilds_the_run(trip_config, samples_dir, mode):
    result = run(trip_config(mode=mode, **_failure_scenario(samples_dir)))
    replayed = replay(read_records(result.run_dir / "events.jsonl"))

    assert replayed.markdown == result.final_markdown
    assert replayed.metrics == result.metrics
    assert replayed.status == result.status
    assert replayed.answer == result.answer


def test_replay_of_a_partial_log(trip_config):
    result = run(trip_config())
    records = read_records(result.run_dir / "events.jsonl")
    cut = _types(records).index("ConclusionApplied") + 1
    partial = replay(records[:cut])
    assert partial.status is None
    assert partial.plan.find("1.1").status is TaskStatus.COMPLETED
    assert partial.plan.find("1.2").status is TaskStatus.PENDING
    assert not partial.metrics.fulfilled
    assert replay([]).plan is None


def test_record_then_replay_run(trip_config, tmp_path):
    cache = tmp_path / "cache.jsonl"
    recorded = run(trip_config("recorded", backend={"kind": "record", "record_inner": "scripted", "replay_cache": str(cache)}))
    replayed = run(trip_config("replayed", backend={"kind": "replay", "replay_cache": str(cache)}))

    assert len(cache.read_text(encoding="utf-8").splitlines()) == 15
    assert replayed.status == recorded.status == "fulfilled"
    assert replayed.final_markdown == recorded.final_markdown
    assert (replayed.run_dir / "events.jsonl").read_bytes() == (recorded.run_dir / "events.jsonl").read_bytes()


def test_config_snapshot_is_written(trip_config):
    result = run(trip_config(planner_budget=9))
    snapshot = yaml.safe_load((result.run_dir / "config.yaml").read_text(encoding="utf-8"))
    assert snapshot["planner_budget"] == 9
    assert snapshot["goal"] == "Plan a four-day trip to Kyoto for two people in April"
    assert snapshot["backend"]["kind"] == "scripted"
