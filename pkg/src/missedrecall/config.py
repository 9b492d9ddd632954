"""Run configuration loaded from a YAML file.

Relative paths resolve against the config file's directory. Secrets never
live in the file: ``llm.api_key_env`` names the environment variable that
holds the key.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from datetime import time as dtime
from pathlib import Path

import yaml

from .catalog import parse_minutes


class ConfigError(ValueError):
    pass


@dataclass
class LLMSettings:
    base_url: str = "http://127.0.0.1:8000/v1"
    model: str = "gpt-3.5-turbo"
    api_key_env: str | None = "OPENAI_API_KEY"
    requests_per_minute: float | None = None
    template_style: str = "cot"
    language: str = "en"
    mock: str | None = None  # path to a canned-reply file


@dataclass
class RetrySettings:
    per_attempt_timeout: float = 30.0
    max_retries: int = 3
    wait_min: float = 0.5
    wait_max: float = 2.0


@dataclass
class BackendSettings:
    kind: str = "sim"  # sim | http
    sim_config: str | None = None
    url: str | None = None
    fields: dict = field(default_factory=dict)
    timeout: float = 10.0


@dataclass
class ContextSettings:
    account_id: str = "missed-recall-probe"
    page_size: int = 20
    page_depth: int = 1
    window: tuple[str, str] = ("10:00", "21:00")
    timestamp: str | None = None  # ISO local time; None means wall clock

    def window_times(self) -> tuple[dtime, dtime]:
        start, end = (parse_minutes(t) for t in self.window)
        if not start < end or end > 1439:
            raise ConfigError(f"bad time window {self.window}")
        return dtime(start // 60, start % 60), dtime(end // 60, end % 60)

    def clock(self) -> datetime:
        return datetime.fromisoformat(self.timestamp) if self.timestamp else datetime.now()


@dataclass
class RunConfig:
    catalog: str
    catalog_format: str | None = None
    generator: str = "template"  # template | llm
    validation: str = "rule"  # llm | rule | off
    llm: LLMSettings = field(default_factory=LLMSettings)
    retry: RetrySettings = field(default_factory=RetrySettings)
    backend: BackendSettings = field(default_factory=BackendSettings)
    context: ContextSettings = field(default_factory=ContextSettings)
    seed: int = 0
    output_dir: str = "out"
    group_cap: int = 6
    workers: int = 1
    partial_failure_threshold: float = 0.5
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self) -> None:
        if self.generator not in ("template", "llm"):
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.validation not in ("llm", "rule", "off"):
            raise ConfigError(f"unknown validation mode {self.validation!r}")
        if self.validation == "off" and self.generator == "llm":
            raise ConfigError("LLM-generated queries must be validated (validation=off needs generator=template)")
        if self.backend.kind not in ("sim", "http"):
            raise ConfigError(f"unknown backend kind {self.backend.kind!r}")
        if self.backend.kind == "http" and not self.backend.url:
            raise ConfigError("http backend needs backend.url")
        self.context.window_times()

    def path(self, value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def out(self) -> Path:
        return self.path(self.output_dir)

    def check_files(self) -> None:
        for label, value in (("catalog", self.catalog), ("backend.sim_config", self.backend.sim_config),
                             ("llm.mock", self.llm.mock)):
            if value is not None and not self.path(value).exists():
                raise ConfigError(f"{label} file not found: {self.path(value)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _section(cls, data):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} section must be a mapping")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from exc


def config_from_dict(data: dict, base_dir=".") -> RunConfig:
    data = dict(data or {})
    if "catalog" not in data:
        raise ConfigError("config needs a catalog path")
    ctx = data.get("context") or {}
    if "window" in ctx:
        ctx = {**ctx, "window": tuple(ctx["window"])}
    try:
        return RunConfig(
            **{k: v for k, v in data.items() if k not in ("llm", "retry", "backend", "context")},
            llm=_section(LLMSettings, data.get("llm")),
            retry=_section(RetrySettings, data.get("retry")),
            backend=_section(BackendSettings, data.get("backend")),
            context=_section(ContextSettings, ctx),
            base_dir=str(base_dir),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)
