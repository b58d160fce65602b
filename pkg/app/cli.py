"""
Command line entry point: ``python -m app <command>``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import get_settings, load_run_config, settings_help
from .errors import BackendError, ConfigError, FactoryError, ProgressError, ReplayMiss, ScenarioMismatch, ToolError
from .progress.markdown import parse_markdown, serialize_markdown
from .progress.state import render_notes
from .services.orchestrator import Orchestrator, replay
from .services.scenario_check import check_scenario
from .storage.event_log import read_records

logger = logging.getLogger(__name__)

EXIT_CONFIG_ERROR = 4


def _configure_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(asctime)s | %(levelname)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _run_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    backend = {
        "kind": args.backend,
        "scenario": args.scenario,
        "replay_cache": args.replay_cache,
        "model": args.model,
        "base_url": args.base_url,
    }
    web = {"mode": args.web_mode, "fixtures": args.fixtures}
    overrides: Dict[str, Any] = {
        "goal": args.goal,
        "mode": args.mode,
        "backend": {key: value for key, value in backend.items() if value is not None},
        "web": {key: value for key, value in web.items() if value is not None},
        "run_dir": args.run_dir,
        "sandbox_root": args.sandbox,
        "knowledge_dir": args.knowledge,
        "planner_budget": args.budget,
        "actor_step_limit": args.step_limit,
        "dependency_mode": args.dependency_mode,
        "persona_mode": args.persona_mode,
        "fallback_bundle": args.fallback_bundle,
        "enable_shell": True if args.enable_shell else None,
    }
    if args.bundles:
        overrides["bundle_manifests"] = args.bundles
    overrides = {key: value for key, value in overrides.items() if value not in (None, {})}
    if args.no_fallback_bundle:
        overrides["fallback_bundle"] = None
    return overrides


def _records_path(target: Path) -> Path:
    return target / "events.jsonl" if target.is_dir() else target


# ==================== commands ====================


def cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, _run_overrides(args))
    if not config.goal.strip():
        raise ConfigError("a goal is required (--goal or 'goal:' in the config file)")
    result = Orchestrator(config).run()
    print(result.final_markdown, end="")
    print()
    print(f"status: {result.status}")
    if result.answer:
        print(f"answer: {result.answer}")
    if result.reason:
        print(f"reason: {result.reason}")
    print(f"metrics: {json.dumps(result.metrics.model_dump(), sort_keys=True)}")
    print(f"run directory: {result.run_dir}")
    return result.exit_code


def cmd_replay(args: argparse.Namespace) -> int:
    path = _records_path(Path(args.log))
    if not path.is_file():
        raise ConfigError(f"event log not found: {path}")
    result = replay(read_records(path))
    if args.json:
        print(json.dumps(
            {"status": result.status, "answer": result.answer, "metrics": result.metrics.model_dump(),
             "progress": result.markdown},
            indent=2,
            sort_keys=True,
        ))
        return 0
    print(result.markdown, end="")
    print(f"status: {result.status or 'running'}")
    print(f"metrics: {json.dumps(result.metrics.model_dump(), sort_keys=True)}")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    target = Path(args.target)
    if target.suffix in (".md", ".markdown"):
        plan = parse_markdown(target.read_text(encoding="utf-8"))
    else:
        path = _records_path(target)
        if not path.is_file():
            raise ConfigError(f"nothing to inspect at {target}")
        plan = replay(read_records(path)).plan
        if plan is None:
            print("(no plan yet)")
            return 0
    print(serialize_markdown(plan, explicit_ids=args.ids), end="")
    if args.notes:
        print()
        print(render_notes(plan))
    return 0


def cmd_validate_scenario(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, {"goal": args.goal} if args.goal else None)
    problems = check_scenario(config, Path(args.scenario) if args.scenario else None)
    if not problems:
        print("scenario ok")
        return 0
    for problem in problems:
        print(f"- {problem}")
    return EXIT_CONFIG_ERROR


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, log_level=(args.log_level or "info").lower())
    return 0


# ==================== parser ====================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wayfinder",
        description="Plan, dispatch and track specialist agents towards a goal",
        epilog=settings_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default: WAYFINDER_LOG_LEVEL or INFO)")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run the orchestration loop for a goal")
    run_parser.add_argument("--config", type=Path, help="YAML run configuration")
    run_parser.add_argument("--goal", help="Goal text (overrides the config)")
    run_parser.add_argument("--mode", choices=["dynamic", "static-baseline"])
    run_parser.add_argument("--backend", choices=["http", "scripted", "replay", "record"])
    run_parser.add_argument("--scenario", help="Scenario file for the scripted backend")
    run_parser.add_argument("--replay-cache", help="Cache file for the replay and record backends")
    run_parser.add_argument("--model", help="Model name for the http backend")
    run_parser.add_argument("--base-url", help="OpenAI-compatible endpoint for the http backend")
    run_parser.add_argument("--run-dir", help="Run directory (default: <runs_dir>/<goal slug>-<id>)")
    run_parser.add_argument("--sandbox", help="Sandbox root for file tools (default: <run dir>/sandbox)")
    run_parser.add_argument("--knowledge", help="Knowledge base directory")
    run_parser.add_argument("--bundles", action="append", metavar="MANIFEST", help="Extra bundle manifest (repeatable)")
    run_parser.add_argument("--budget", type=int, metavar="N", help="Planner iteration budget")
    run_parser.add_argument("--step-limit", type=int, metavar="N", help="ReAct steps per actor")
    run_parser.add_argument("--dependency-mode", choices=["strict", "free"])
    run_parser.add_argument("--persona-mode", choices=["generate", "pool", "template"])
    fallback = run_parser.add_mutually_exclusive_group()
    fallback.add_argument("--fallback-bundle", metavar="NAME", help="Bundle for subtasks no keyword matches")
    fallback.add_argument("--no-fallback-bundle", action="store_true", help="Fail subtasks no keyword matches")
    run_parser.add_argument("--web-mode", choices=["mock", "live"])
    run_parser.add_argument("--fixtures", help="Web fixture directory for mock mode")
    run_parser.add_argument("--enable-shell", action="store_true", help="Register the Shell bundle")
    run_parser.set_defaults(handler=cmd_run)

    replay_parser = commands.add_parser("replay", help="Rebuild the final progress list from an event log")
    replay_parser.add_argument("log", help="events.jsonl or a run directory")
    replay_parser.add_argument("--json", action="store_true", help="Print one JSON document")
    replay_parser.set_defaults(handler=cmd_replay)

    inspect_parser = commands.add_parser("inspect", help="Render the current progress list of a run")
    inspect_parser.add_argument("target", help="Run directory, events.jsonl or a progress Markdown file")
    inspect_parser.add_argument("--ids", action="store_true", help="Write every task id")
    inspect_parser.add_argument("--notes", action="store_true", help="Also print progress notes")
    inspect_parser.set_defaults(handler=cmd_inspect)

    check_parser = commands.add_parser("validate-scenario", help="Dry-check a scenario file against a config")
    check_parser.add_argument("scenario", nargs="?", help="Scenario file (default: the config's)")
    check_parser.add_argument("--config", type=Path, help="YAML run configuration")
    check_parser.add_argument("--goal", help="Goal text (overrides the config)")
    check_parser.set_defaults(handler=cmd_validate_scenario)

    serve_parser = commands.add_parser("serve", help="Start the read-only inspection API")
    serve_parser.add_argument("--host", default="127.0.0.1")
    serve_parser.add_argument("--port", type=int, default=8000)
    serve_parser.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (ScenarioMismatch, ReplayMiss) as exc:
        logger.error(f"scenario error: {exc}")
        return EXIT_CONFIG_ERROR
    except BackendError as exc:
        logger.error(f"backend error: {exc}")
        return 2
    except (ConfigError, FactoryError, ProgressError, ToolError) as exc:
        logger.error(f"configuration error: {exc}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
