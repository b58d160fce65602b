from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError

ENV_PREFIX = "WAYFINDER_"


class Settings(BaseSettings):
    """Process-wide settings read from ``WAYFINDER_*`` variables or ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",  # Ignore unrelated keys in a shared .env file
    )
    app_name: str = "Wayfinder"
    log_level: str = "INFO"
    runs_dir: Path = Path("runs")

    # OpenAI-compatible chat completions endpoint (any vendor or local server)
    llm_base_url: str = ""
    llm_api_key: str = ""
    llm_model: str = "gpt-4o-mini"
    llm_timeout: float = 60.0
    llm_temperature: float = 0.2
    llm_max_tokens: int = 1500


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


def settings_help() -> str:
    """One line per environment variable, for the CLI epilog."""
    lines = ["environment variables:"]
    for name, field in Settings.model_fields.items():
        lines.append(f"  {ENV_PREFIX}{name.upper():<20} default: {field.default}")
    return "\n".join(lines)


# ==================== Run configuration ====================


class BackendConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["http", "scripted", "replay", "record"] = "scripted"
    scenario: Optional[Path] = None
    replay_cache: Optional[Path] = None
    # what the record backend wraps
    record_inner: Literal["http", "scripted"] = "http"
    model: Optional[str] = None
    base_url: Optional[str] = None
    api_key: Optional[str] = None
    temperature: Optional[float] = None
    max_tokens: Optional[int] = Field(default=None, ge=1)
    timeout: Optional[float] = Field(default=None, gt=0)


class WebConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["mock", "live"] = "mock"
    fixtures: Optional[Path] = None
    timeout: float = Field(default=10.0, gt=0)
    max_bytes: int = Field(default=200_000, ge=1)


class PersonaEntry(BaseModel):
    persona: str
    keywords: List[str] = Field(default_factory=list)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    goal: str = ""
    mode: Literal["dynamic", "static-baseline"] = "dynamic"
    backend: BackendConfig = Field(default_factory=BackendConfig)

    bundle_manifests: List[Path] = Field(default_factory=list)
    include_default_bundles: bool = True
    enable_shell: bool = False
    bundle_selection: Literal["keyword", "assisted"] = "keyword"
    fallback_bundle: Optional[str] = "Core"

    knowledge_dir: Optional[Path] = None
    knowledge_limit: int = Field(default=3, ge=0)

    persona_mode: Literal["generate", "pool", "template"] = "generate"
    persona_pool: List[PersonaEntry] = Field(default_factory=list)
    environment: Dict[str, str] = Field(default_factory=dict)

    sandbox_root: Optional[Path] = None
    web: WebConfig = Field(default_factory=WebConfig)

    planner_budget: int = Field(default=50, ge=1)
    actor_step_limit: int = Field(default=20, ge=0)
    dependency_mode: Literal["strict", "free"] = "strict"
    history_window: int = Field(default=5, ge=0)

    run_dir: Optional[Path] = None

    @field_validator("environment", mode="before")
    @classmethod
    def _stringify_environment(cls, value: Any) -> Any:
        if isinstance(value, dict):
            return {str(key): str(item) for key, item in value.items()}
        return value

    def resolve_paths(self, base_dir: Path) -> "RunConfig":
        """Return a copy whose relative paths are anchored at ``base_dir``."""

        def _abs(path: Optional[Path]) -> Optional[Path]:
            if path is None:
                return None
            path = Path(path).expanduser()
            return path if path.is_absolute() else (base_dir / path).resolve()

        return self.model_copy(
            update={
                "backend": self.backend.model_copy(
                    update={
                        "scenario": _abs(self.backend.scenario),
                        "replay_cache": _abs(self.backend.replay_cache),
                    }
                ),
                "bundle_manifests": [_abs(path) for path in self.bundle_manifests],
                "knowledge_dir": _abs(self.knowledge_dir),
                "sandbox_root": _abs(self.sandbox_root),
                "web": self.web.model_copy(update={"fixtures": _abs(self.web.fixtures)}),
                "run_dir": _abs(self.run_dir),
            }
        )

    def snapshot(self) -> Dict[str, Any]:
        """Plain data for the run directory's ``config.yaml``."""
        return self.model_dump(mode="json")


def _deep_merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Overlay ``overrides`` on ``base``; an explicit None clears the field."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Read a YAML run configuration and apply CLI overrides on top.

    Relative paths in the file resolve against the file's directory; relative
    paths given as overrides resolve against the working directory.
    """
    data: Dict[str, Any] = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        data = loaded
        base_dir = path.resolve().parent

    try:
        config = RunConfig.model_validate(data).resolve_paths(base_dir)
        if overrides:
            override_config = RunConfig.model_validate(_deep_merge(config.snapshot(), overrides))
            config = override_config.resolve_paths(Path.cwd())
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from exc
    return config
