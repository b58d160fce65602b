"""
ReAct execution loop for a single subtask.

Each turn the backend sees the actor's system prompt, the subtask and the full
memory transcript, and answers with one thought plus one action. Tool calls
are executed and their observations appended; a final action ends the loop
with a conclusion report.
"""
from __future__ import annotations

import dataclasses
import logging
from typing import Callable, List, Optional, Tuple

from ..errors import MalformedAction
from ..integrations.base import ChatMessage, CompletionBackend, CompletionRequest
from ..progress.schemas import ConclusionReport, StatusUpdate, TaskStatus
from ..tools.registry import execute
from ..tools.schemas import ProgressSink, ToolContext
from .protocol import REPAIR_TEMPLATE, parse_action, subtask_message, transcript
from .schemas import ActionRequest, ActorInstance, Finalize, ReactStep, RejectedReply, ToolCall

logger = logging.getLogger(__name__)

StepListener = Callable[[ActorInstance, ReactStep], None]


class _Unparseable(MalformedAction):
    def __init__(self, error: str, rejected: List[RejectedReply]) -> None:
        super().__init__(error)
        self.rejected = rejected


def _base_messages(actor: ActorInstance) -> List[ChatMessage]:
    messages = [
        ChatMessage(role="system", content=actor.prompt),
        ChatMessage(role="user", content=subtask_message(actor.subtask)),
    ]
    messages.extend(ChatMessage(role=role, content=content) for role, content in transcript(actor.memory))
    return messages


def _with_rejections(messages: List[ChatMessage], rejected: List[RejectedReply]) -> List[ChatMessage]:
    extended = list(messages)
    for reply in rejected:
        extended.append(ChatMessage(role="assistant", content=reply.raw))
        extended.append(ChatMessage(role="user", content=REPAIR_TEMPLATE.format(error=reply.error)))
    return extended


def _step(actor: ActorInstance, backend: CompletionBackend) -> Tuple[str, ActionRequest, List[RejectedReply]]:
    base = _base_messages(actor)
    rejected: List[RejectedReply] = []
    # first attempt plus one repair
    for _ in range(2):
        request = CompletionRequest(label=actor.label, messages=_with_rejections(base, rejected))
        raw = backend.complete(request)
        try:
            thought, action = parse_action(raw, actor.tool_names)
            return thought, action, rejected
        except MalformedAction as exc:
            logger.info(f"{actor.actor_id}: malformed reply ({exc})")
            rejected.append(RejectedReply(raw=raw, error=str(exc)))
    raise _Unparseable(rejected[-1].error, rejected)


def step(actor: ActorInstance, backend: CompletionBackend) -> Tuple[str, ActionRequest]:
    """One reasoning turn. Raises MalformedAction when the repair attempt fails too."""
    if len(actor.memory) >= actor.step_limit:
        raise MalformedAction(f"step limit of {actor.step_limit} already reached")
    thought, action, _ = _step(actor, backend)
    return thought, action


def execute_action(action: ToolCall, actor: ActorInstance, context: ToolContext) -> str:
    return execute(actor.toolkit, action.tool, action.args, context)


def _failed(actor: ActorInstance, summary: str) -> ConclusionReport:
    task_id = actor.subtask.task_id
    return ConclusionReport(
        task_id=task_id,
        actor_id=actor.actor_id,
        status_updates=[StatusUpdate(task_id=task_id, status=TaskStatus.FAILED)],
        summary=summary,
        final_status=TaskStatus.FAILED,
    )


def _report_from(actor: ActorInstance, final: Finalize) -> ConclusionReport:
    # the final status decides the assigned task; its other updates are dropped
    task_id = actor.subtask.task_id
    own = StatusUpdate(task_id=task_id, status=final.status)
    contradicting = [u for u in final.status_updates if u.task_id == task_id and u.status is not final.status]
    if contradicting:
        logger.warning(
            f"{actor.actor_id} reported {task_id} as {contradicting[0].status.value} "
            f"but finalized it as {final.status.value}; keeping {final.status.value}"
        )
    updates = [own] + [update for update in final.status_updates if update.task_id != task_id]
    return ConclusionReport(
        task_id=task_id,
        actor_id=actor.actor_id,
        status_updates=updates,
        summary=final.summary,
        pointers=final.pointers,
        final_status=final.status,
    )


def run(
    actor: ActorInstance,
    backend: CompletionBackend,
    progress_sink: Optional[ProgressSink],
    context: Optional[ToolContext] = None,
    on_step: Optional[StepListener] = None,
) -> ConclusionReport:
    """Drive the actor until it finalizes or runs out of steps.

    Every actor-level failure becomes a Failed report; backend errors
    propagate to the caller.
    """
    context = dataclasses.replace(
        context or ToolContext(),
        task_id=actor.subtask.task_id,
        actor_id=actor.actor_id,
        progress_sink=progress_sink,
    )
    if actor.step_limit == 0:
        return _failed(actor, "step limit of 0 reached before any action was taken")

    while len(actor.memory) < actor.step_limit:
        try:
            thought, action, repairs = _step(actor, backend)
        except _Unparseable as exc:
            actor.abandoned = exc.rejected
            return _failed(actor, f"actor stopped after an unparseable reply and one repair attempt: {exc}")

        index = len(actor.memory)
        if isinstance(action, Finalize):
            react_step = ReactStep(index=index, thought=thought, action=action, repairs=repairs)
            actor.memory.append(react_step)
            if on_step:
                on_step(actor, react_step)
            logger.info(f"{actor.actor_id} finalized {actor.subtask.task_id} as {action.status.value}")
            return _report_from(actor, action)

        observation = execute_action(action, actor, context)
        react_step = ReactStep(index=index, thought=thought, action=action, observation=observation, repairs=repairs)
        actor.memory.append(react_step)
        if on_step:
            on_step(actor, react_step)

    return _failed(actor, f"step limit of {actor.step_limit} reached without a final report")


def replay_requests(actor: ActorInstance) -> List[CompletionRequest]:
    """Rebuild, from memory alone, every request the actor sent to its backend."""
    requests: List[CompletionRequest] = []
    head = [
        ChatMessage(role="system", content=actor.prompt),
        ChatMessage(role="user", content=subtask_message(actor.subtask)),
    ]
    for index, react_step in enumerate(actor.memory):
        base = head + [
            ChatMessage(role=role, content=content) for role, content in transcript(actor.memory[:index])
        ]
        for count in range(len(react_step.repairs) + 1):
            requests.append(
                CompletionRequest(label=actor.label, messages=_with_rejections(base, react_step.repairs[:count]))
            )
    if actor.abandoned:
        base = head + [ChatMessage(role=role, content=content) for role, content in transcript(actor.memory)]
        for count in range(len(actor.abandoned)):
            requests.append(
                CompletionRequest(label=actor.label, messages=_with_rejections(base, actor.abandoned[:count]))
            )
    return requests
