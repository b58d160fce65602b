import json

import pytest

from app.cli import EXIT_CONFIG_ERROR, _run_overrides, build_parser, main
from app.config import load_run_config


@pytest.fixture
def config_path(samples_dir):
    return str(samples_dir / "trip_config.yaml")


def _run(config_path, run_dir, *extra):
    return main(["run", "--config", config_path, "--run-dir", str(run_dir), *extra])


def test_run_success(config_path, tmp_path, capsys):
    assert _run(config_path, tmp_path / "cli") == 0
    out = capsys.readouterr().out
    assert "status: fulfilled" in out
    assert "answer: Flights and hotel booked" in out
    assert f"run directory: {(tmp_path / 'cli').resolve()}" in out
    metrics = json.loads(out.split("metrics: ", 1)[1].splitlines()[0])
    assert metrics["total_backend_calls"] == 15


def test_static_baseline_exit_code(config_path, samples_dir, tmp_path, capsys):
    code = _run(
        config_path,
        tmp_path / "static",
        "--mode",
        "static-baseline",
        "--scenario",
        str(samples_dir / "trip_failure_scenario.yaml"),
    )
    assert code == 1
    assert "status: unfulfilled" in capsys.readouterr().out


def test_budget_flag(config_path, tmp_path, capsys):
    assert _run(config_path, tmp_path / "short", "--budget", "1") == 3
    assert "reason: planner budget of 1" in capsys.readouterr().out


def test_missing_goal_is_a_config_error(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run"]) == EXIT_CONFIG_ERROR


def test_bad_config_file(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("goal: x\nplanner_budget: 0\n", encoding="utf-8")
    assert main(["run", "--config", str(config)]) == EXIT_CONFIG_ERROR
    config.write_text("goal: x\nsurprise: 1\n", encoding="utf-8")
    assert main(["run", "--config", str(config)]) == EXIT_CONFIG_ERROR


def test_replay_and_inspect(config_path, tmp_path, capsys):
    run_dir = tmp_path / "cli"
    _run(config_path, run_dir)
    final = (run_dir / "progress.md").read_text(encoding="utf-8")
    capsys.readouterr()

    assert main(["replay", str(run_dir)]) == 0
    out = capsys.readouterr().out
    assert out.startswith(final)
    assert "status: fulfilled" in out

    assert main(["replay", str(run_dir / "events.jsonl"), "--json"]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["progress"] == final
    assert document["metrics"]["subtasks_dispatched"] == 5

    assert main(["inspect", str(run_dir), "--ids", "--notes"]) == 0
    out = capsys.readouterr().out
    assert "        > id: 1.1" in out
    assert "- 1.1 [status_change] dispatched to actor-1" in out

    assert main(["inspect", str(run_dir / "progress.md")]) == 0
    assert capsys.readouterr().out == final


def test_replay_and_inspect_missing_targets(tmp_path):
    assert main(["replay", str(tmp_path / "nothing")]) == EXIT_CONFIG_ERROR
    assert main(["inspect", str(tmp_path / "nothing")]) == EXIT_CONFIG_ERROR


def test_inspect_empty_log(tmp_path, capsys):
    (tmp_path / "events.jsonl").write_text("", encoding="utf-8")
    assert main(["inspect", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == "(no plan yet)"


def test_validate_sample_scenarios(config_path, samples_dir, capsys):
    assert main(["validate-scenario", "--config", config_path]) == 0
    assert capsys.readouterr().out.strip() == "scenario ok"
    assert main(["validate-scenario", str(samples_dir / "trip_failure_scenario.yaml"), "--config", config_path]) == 0


def test_validate_broken_scenario(config_path, tmp_path, capsys):
    scenario = tmp_path / "broken.yaml"
    scenario.write_text(
        "steps:\n"
        "  - label: planner\n"
        "    contains: Make a plan\n"
        "    response: \"- [ ] Step\\n\"\n"
        "  - label: planner\n"
        "    response: '{\"action\": \"dispatch\", \"task_id\": \"1\"}'\n"
        "  - label: critic\n"
        "    response: fine\n"
        "  - label: 'actor:*'\n"
        "    response: '{\"thought\": \"go\", \"action\": {\"tool\": \"teleport\"}}'\n",
        encoding="utf-8",
    )
    assert main(["validate-scenario", str(scenario), "--config", config_path]) == EXIT_CONFIG_ERROR
    problems = capsys.readouterr().out.splitlines()
    assert problems[0] == "- step 0: 'Make a plan' does not occur in the initial planning prompt"
    assert problems[1] == "- step 1: dispatch without a plan block"
    assert "- step 2: label 'critic' matches no backend caller" in problems
    assert any(line.startswith("- step 3: actor reply would be rejected: unknown tool 'teleport'") for line in problems)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    assert "WAYFINDER_LOG_LEVEL" in build_parser().format_help()


def test_fallback_bundle_flags(config_path):
    parser = build_parser()
    overrides = _run_overrides(parser.parse_args(["run", "--config", config_path, "--no-fallback-bundle"]))
    assert overrides == {"fallback_bundle": None}
    assert load_run_config(config_path, overrides).fallback_bundle is None
    assert load_run_config(config_path, {}).fallback_bundle == "Core"

    overrides = _run_overrides(parser.parse_args(["run", "--fallback-bundle", "WebFetch"]))
    assert overrides == {"fallback_bundle": "WebFetch"}
    with pytest.raises(SystemExit):
        parser.parse_args(["run", "--fallback-bundle", "Core", "--no-fallback-bundle"])
