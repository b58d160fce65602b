"""
Cognitive backends: live OpenAI-compatible HTTP, scripted scenarios and record/replay.
"""
from pathlib import Path

from ..config import BackendConfig
from ..errors import ConfigError
from .base import ChatMessage, CompletionBackend, CompletionRequest, ask, complete
from .openai_backend import OpenAIBackend
from .replay import RecordingBackend, ReplayBackend
from .scripted import Scenario, ScenarioStep, ScriptedBackend


def _scripted(config: BackendConfig) -> ScriptedBackend:
    if config.scenario is None:
        raise ConfigError("the scripted backend needs 'backend.scenario'")
    if not Path(config.scenario).is_file():
        raise ConfigError(f"scenario file not found: {config.scenario}")
    return ScriptedBackend.from_file(config.scenario)


def _http(config: BackendConfig) -> OpenAIBackend:
    return OpenAIBackend(
        base_url=config.base_url,
        api_key=config.api_key,
        model=config.model,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        timeout=config.timeout,
    )


def build_backend(config: BackendConfig, default_cache: Path) -> CompletionBackend:
    cache = Path(config.replay_cache) if config.replay_cache else default_cache
    if config.kind == "scripted":
        return _scripted(config)
    if config.kind == "http":
        return _http(config)
    if config.kind == "replay":
        if not cache.is_file():
            raise ConfigError(f"replay cache not found: {cache}")
        return ReplayBackend(cache)
    inner = _scripted(config) if config.record_inner == "scripted" else _http(config)
    return RecordingBackend(inner, cache)


__all__ = [
    "ChatMessage",
    "CompletionBackend",
    "CompletionRequest",
    "OpenAIBackend",
    "RecordingBackend",
    "ReplayBackend",
    "Scenario",
    "ScenarioStep",
    "ScriptedBackend",
    "ask",
    "build_backend",
    "complete",
]
