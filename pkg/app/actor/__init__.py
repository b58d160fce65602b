"""
Dynamic actors: one ReAct loop per dispatched subtask.
"""
from .actor import execute_action, replay_requests, run, step
from .protocol import OUTPUT_FORMAT, parse_action
from .schemas import ActionRequest, ActorInstance, Finalize, ReactStep, RejectedReply, ToolCall

__all__ = [
    "OUTPUT_FORMAT",
    "ActionRequest",
    "ActorInstance",
    "Finalize",
    "ReactStep",
    "RejectedReply",
    "ToolCall",
    "execute_action",
    "parse_action",
    "replay_requests",
    "run",
    "step",
]
