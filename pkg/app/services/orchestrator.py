"""
Run loop: plan, dispatch one subtask at a time, fold each outcome back in.

Every state change is written to the run's event log; ``replay`` rebuilds the
final progress list and the metrics from that log alone.
"""
from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence
from uuid import uuid4

import yaml
from pydantic import BaseModel

from ..actor.actor import run as run_actor
from ..actor.schemas import ActorInstance, ReactStep
from ..config import RunConfig, get_settings
from ..errors import BackendError, BudgetExhausted, NoBundleMatched, PlannerError, ProgressError
from ..factory.factory import ActorFactory
from ..factory.knowledge import load_knowledge_base
from ..integrations import build_backend
from ..integrations.base import CompletionBackend
from ..planner.planner import evaluate_outcome, initialize_plan, plan_step
from ..planner.schemas import Abort, Dispatch, Finish, PlannerState, SubtaskSpec
from ..progress.manager import ProgressManager
from ..progress.markdown import parse_markdown, serialize_markdown
from ..progress.schemas import (
    ConclusionReport,
    EventKind,
    ProgressEvent,
    ProgressList,
    StatusUpdate,
    TaskStatus,
)
from ..progress.state import apply_conclusion, apply_event, is_fulfilled, merge_revision
from ..storage.event_log import EventLog, EventRecord
from ..tools.registry import build_registry
from ..tools.sandbox import Sandbox
from ..tools.schemas import ToolContext, WebOptions

logger = logging.getLogger(__name__)

ORCHESTRATOR_ID = "orchestrator"

RunStatus = Literal["fulfilled", "unfulfilled", "aborted", "budget_exhausted"]

EXIT_CODES: Dict[str, int] = {
    "fulfilled": 0,
    "unfulfilled": 1,
    "aborted": 2,
    "budget_exhausted": 3,
}


class RunMetrics(BaseModel):
    subtasks_dispatched: int = 0
    actors_instantiated: int = 0
    failures_observed: int = 0
    replans: int = 0
    total_backend_calls: int = 0
    fulfilled: bool = False


class RunResult(BaseModel):
    run_id: str
    status: RunStatus
    answer: Optional[str] = None
    reason: Optional[str] = None
    metrics: RunMetrics
    run_dir: Path
    final_markdown: str

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


class ReplayResult(BaseModel):
    plan: Optional[ProgressList] = None
    metrics: RunMetrics
    status: Optional[str] = None
    answer: Optional[str] = None

    @property
    def markdown(self) -> str:
        return serialize_markdown(self.plan) if self.plan is not None else ""


def _slug(text: str, width: int = 32) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug[:width].rstrip("-") or "run"


def _failed_report(task_id: str, actor_id: str, summary: str) -> ConclusionReport:
    return ConclusionReport(
        task_id=task_id,
        actor_id=actor_id,
        status_updates=[StatusUpdate(task_id=task_id, status=TaskStatus.FAILED)],
        summary=summary,
        final_status=TaskStatus.FAILED,
    )


class Orchestrator:
    """Drives one run. Build it from a ``RunConfig`` and call ``run()`` once."""

    def __init__(self, config: RunConfig, backend: Optional[CompletionBackend] = None) -> None:
        self.config = config
        settings = get_settings()
        if config.run_dir is not None:
            self.run_dir = Path(config.run_dir)
        else:
            self.run_dir = Path(settings.runs_dir) / f"{_slug(config.goal)}-{uuid4().hex[:8]}"
        self.run_id = self.run_dir.name
        self.run_dir.mkdir(parents=True, exist_ok=True)

        self.backend = backend or build_backend(config.backend, default_cache=self.run_dir / "replay.jsonl")
        self.registry = build_registry(
            config.bundle_manifests,
            include_defaults=config.include_default_bundles,
            enable_shell=config.enable_shell,
        )
        self.factory = ActorFactory(
            self.registry,
            kb=load_knowledge_base(config.knowledge_dir),
            env=config.environment,
            backend=self.backend,
            persona_mode=config.persona_mode,
            persona_pool=config.persona_pool,
            bundle_selection=config.bundle_selection,
            fallback_bundle=config.fallback_bundle,
            knowledge_limit=config.knowledge_limit,
            step_limit=config.actor_step_limit,
        )
        self.sandbox = Sandbox(config.sandbox_root or self.run_dir / "sandbox")
        self.web = WebOptions(
            mode=config.web.mode,
            fixtures_dir=config.web.fixtures,
            timeout=config.web.timeout,
            max_bytes=config.web.max_bytes,
        )
        self.log = EventLog(self.run_dir / "events.jsonl")
        self.metrics = RunMetrics()
        self.manager: Optional[ProgressManager] = None
        self._actor_count = 0

        (self.run_dir / "config.yaml").write_text(
            yaml.safe_dump(config.snapshot(), sort_keys=True, allow_unicode=True), encoding="utf-8"
        )

    # ==================== event log hooks ====================

    def _on_progress(self, kind: str, payload: object) -> None:
        # conclusions and commits are logged by the loop itself
        if kind == "event" and isinstance(payload, ProgressEvent):
            self.log.append("ProgressEvent", payload.model_dump(mode="json"))

    def _on_step(self, actor: ActorInstance, react_step: ReactStep) -> None:
        self.log.append(
            "ReactStep",
            {
                "actor_id": actor.actor_id,
                "task_id": actor.subtask.task_id,
                "step": react_step.model_dump(mode="json"),
            },
        )

    # ==================== shared pieces ====================

    def _start(self, plan: ProgressList) -> ProgressManager:
        self.log.append(
            "PlanInitialized",
            {"goal": self.config.goal, "markdown": serialize_markdown(plan, explicit_ids=True)},
        )
        self.manager = ProgressManager(plan, listener=self._on_progress)
        return self.manager

    def _dispatch(self, subtask: SubtaskSpec) -> ConclusionReport:
        """Instantiate one actor for ``subtask`` and run it to its conclusion."""
        assert self.manager is not None
        self._actor_count += 1
        actor_id = f"actor-{self._actor_count}"
        self.metrics.subtasks_dispatched += 1
        self.log.append("SubtaskDispatched", {"actor_id": actor_id, "subtask": subtask.model_dump(mode="json")})
        self.manager.push(
            ProgressEvent(
                task_id=subtask.task_id,
                actor_id=ORCHESTRATOR_ID,
                status=EventKind.STATUS_CHANGE,
                message=f"dispatched to {actor_id}",
            )
        )
        logger.info(f"[Orchestrator] Dispatching {subtask.task_id} to {actor_id}: {subtask.description}")

        try:
            blueprint, actor = self.factory.build(subtask, actor_id)
        except NoBundleMatched as exc:
            return _failed_report(subtask.task_id, actor_id, f"no actor could be built: {exc}")

        self.metrics.actors_instantiated += 1
        self.log.append(
            "ActorInstantiated",
            {"actor_id": actor_id, "task_id": subtask.task_id, **blueprint.model_dump(mode="json")},
        )
        context = ToolContext(sandbox=self.sandbox, progress_reader=self.manager.snapshot, web=self.web)
        return run_actor(actor, self.backend, self.manager, context, on_step=self._on_step)

    def _record_conclusion(self, report: ConclusionReport, timestamp: int) -> None:
        if report.final_status is TaskStatus.FAILED:
            self.metrics.failures_observed += 1
        self.log.append("ConclusionApplied", {"report": report.model_dump(mode="json"), "timestamp": timestamp})

    def _reject(self, report: ConclusionReport, error: ProgressError) -> ConclusionReport:
        logger.warning(f"[Orchestrator] Conclusion for {report.task_id} rejected: {error}")
        self.log.append("ConclusionRejected", {"report": report.model_dump(mode="json"), "error": str(error)})
        return _failed_report(report.task_id or "", report.actor_id, f"conclusion report rejected: {error}")

    def _finish(
        self,
        status: RunStatus,
        answer: Optional[str] = None,
        reason: Optional[str] = None,
    ) -> RunResult:
        plan = self.manager.snapshot() if self.manager else None
        self.metrics.fulfilled = status == "fulfilled"
        self.metrics.total_backend_calls = self.backend.call_count
        self.log.append(
            "RunFinished",
            {"status": status, "answer": answer, "reason": reason, "metrics": self.metrics.model_dump()},
        )
        final_markdown = serialize_markdown(plan) if plan is not None else ""
        (self.run_dir / "progress.md").write_text(final_markdown, encoding="utf-8")
        logger.info(f"[Orchestrator] Run {self.run_id} finished: {status} ({self.metrics.model_dump()})")
        return RunResult(
            run_id=self.run_id,
            status=status,
            answer=answer,
            reason=reason,
            metrics=self.metrics.model_copy(),
            run_dir=self.run_dir,
            final_markdown=final_markdown,
        )

    # ==================== modes ====================

    def run(self) -> RunResult:
        logger.info(f"[Orchestrator] Run {self.run_id} ({self.config.mode}) goal: {self.config.goal}")
        try:
            if self.config.mode == "static-baseline":
                return self._run_static()
            return self._run_dynamic()
        except BackendError as exc:
            logger.error(f"[Orchestrator] Backend failure: {exc}")
            self._finish("aborted", reason=f"backend error: {exc}")
            raise

    def _initial_plan(self) -> Optional[ProgressList]:
        try:
            return initialize_plan(self.config.goal, self.backend)
        except PlannerError as exc:
            logger.error(f"[Orchestrator] No initial plan: {exc}")
            return None

    def _run_dynamic(self) -> RunResult:
        plan = self._initial_plan()
        if plan is None:
            return self._finish("aborted", reason="the planner produced no usable initial plan")
        manager = self._start(plan)
        state = PlannerState(goal=self.config.goal, plan=plan, budget=self.config.planner_budget)

        while True:
            state = state.model_copy(update={"plan": manager.snapshot()})
            try:
                decision = plan_step(
                    state,
                    self.backend,
                    dependency_mode=self.config.dependency_mode,
                    history_window=self.config.history_window,
                )
            except BudgetExhausted as exc:
                return self._finish("budget_exhausted", reason=str(exc))
            except PlannerError as exc:
                return self._finish("aborted", reason=f"planner failure: {exc}")

            replanned = not decision.revised_list.structurally_equal(state.plan)
            if replanned:
                self.metrics.replans += 1
            manager.commit(decision.revised_list)
            self.log.append(
                "PlannerDecision",
                {
                    "iteration": state.iteration + 1,
                    "action": decision.action.model_dump(mode="json"),
                    "rationale": decision.rationale,
                    "proposed_markdown": decision.proposed_markdown,
                    "replanned": replanned,
                },
            )
            action = decision.action

            if isinstance(action, Finish):
                status: RunStatus = "fulfilled" if is_fulfilled(manager.snapshot()) else "unfulfilled"
                return self._finish(status, answer=action.final_answer)
            if isinstance(action, Abort):
                return self._finish("aborted", reason=action.reason)

            assert isinstance(action, Dispatch)
            report = self._dispatch(action.subtask)
            state = state.model_copy(update={"plan": manager.snapshot()})
            stamp = manager.tick()
            try:
                state = evaluate_outcome(state, report, timestamp=stamp)
            except ProgressError as exc:
                report = self._reject(report, exc)
                state = evaluate_outcome(state, report, timestamp=stamp)
            self._record_conclusion(report, stamp)
            manager.commit(state.plan)

    def _run_static(self) -> RunResult:
        """Plan once, run every pending leaf in list order, aggregate at the end."""
        plan = self._initial_plan()
        if plan is None:
            return self._finish("aborted", reason="the planner produced no usable initial plan")
        manager = self._start(plan)

        reports: List[ConclusionReport] = []
        for leaf in [leaf for leaf in plan.leaves() if leaf.status is TaskStatus.PENDING]:
            subtask = SubtaskSpec(
                task_id=leaf.id,
                description=leaf.title,
                completion_criteria=leaf.completion_criteria,
            )
            reports.append(self._dispatch(subtask))

        for report in reports:
            try:
                manager.conclude(report)
            except ProgressError as exc:
                report = self._reject(report, exc)
                manager.conclude(report)
            self._record_conclusion(report, manager.clock)

        answer = "\n".join(f"[{report.task_id}] {report.summary}" for report in reports)
        status: RunStatus = "fulfilled" if is_fulfilled(manager.snapshot()) else "unfulfilled"
        return self._finish(status, answer=answer)


def run(config: RunConfig, backend: Optional[CompletionBackend] = None) -> RunResult:
    return Orchestrator(config, backend).run()


# ==================== replay ====================


def replay(records: Sequence[EventRecord]) -> ReplayResult:
    """Rebuild the progress list and metrics from event records alone.

    Works on a partial log too, which is how a running run is inspected.
    """
    plan: Optional[ProgressList] = None
    goal = ""
    metrics = RunMetrics()
    status: Optional[str] = None
    answer: Optional[str] = None

    for record in records:
        payload: Dict[str, Any] = record.payload
        if record.type == "PlanInitialized":
            goal = payload["goal"]
            plan = parse_markdown(payload["markdown"], goal_text=goal)
        elif record.type == "PlannerDecision" and plan is not None:
            proposed_text = payload.get("proposed_markdown")
            proposed = plan if proposed_text is None else parse_markdown(proposed_text, goal_text=goal)
            revised = merge_revision(plan, proposed)
            if not revised.structurally_equal(plan):
                metrics.replans += 1
            plan = revised
        elif record.type == "SubtaskDispatched":
            metrics.subtasks_dispatched += 1
        elif record.type == "ActorInstantiated":
            metrics.actors_instantiated += 1
        elif record.type == "ProgressEvent" and plan is not None:
            plan = apply_event(plan, ProgressEvent.model_validate(payload))
        elif record.type == "ConclusionApplied" and plan is not None:
            report = ConclusionReport.model_validate(payload["report"])
            if report.final_status is TaskStatus.FAILED:
                metrics.failures_observed += 1
            plan = apply_conclusion(plan, report, timestamp=payload.get("timestamp", 0))
        elif record.type == "RunFinished":
            status = payload.get("status")
            answer = payload.get("answer")
            metrics.total_backend_calls = payload.get("metrics", {}).get("total_backend_calls", 0)

    metrics.fulfilled = status == "fulfilled" and plan is not None and is_fulfilled(plan)
    return ReplayResult(plan=plan, metrics=metrics, status=status, answer=answer)
