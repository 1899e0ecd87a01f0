"""Run configuration: JSON file with env-var interpolation for secrets."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import HarnessError
from .gateway import (
    CACHE_MODES,
    DEFAULT_MAX_PROMPT_CHARS,
    BackendEndpoint,
    ModelGateway,
    ResponseCache,
)

_ENV_REF = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")

RATING_MODES = ("instruction_following", "rule_enhanced")
OBJECTIVE_CHOICES = ("overall", "error_counting")


def interpolate_env(value):
    """Replace ``${NAME}`` in strings (recursively through containers)."""
    if isinstance(value, str):
        def repl(m):
            name = m.group(1)
            if name not in os.environ:
                raise HarnessError(f"config references unset env var {name}")
            return os.environ[name]
        return _ENV_REF.sub(repl, value)
    if isinstance(value, dict):
        return {k: interpolate_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [interpolate_env(v) for v in value]
    return value


@dataclass
class RunConfig:
    endpoints: dict[str, BackendEndpoint] = field(default_factory=dict)
    cache_dir: str | None = None
    cache_mode: str = "off"
    scale_n: int = 100
    mode: str = "instruction_following"
    objectives: tuple[str, ...] = ("overall", "error_counting")
    parallelism: int = 1
    output_dir: str = "out"
    seed: int = 0
    max_prompt_chars: int = DEFAULT_MAX_PROMPT_CHARS
    with_rationale: bool = True

    def __post_init__(self):
        if self.cache_mode not in CACHE_MODES:
            raise HarnessError(f"unknown cache mode {self.cache_mode!r}")
        if self.cache_mode != "off" and not self.cache_dir:
            raise HarnessError(f"cache mode {self.cache_mode!r} needs cache_dir")
        if self.mode not in RATING_MODES:
            raise HarnessError(f"unknown rating mode {self.mode!r}")
        for objective in self.objectives:
            if objective not in OBJECTIVE_CHOICES:
                raise HarnessError(f"unknown objective {objective!r}")
        if self.parallelism < 1:
            raise HarnessError("parallelism must be >= 1")


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise HarnessError(f"cannot load config {path}: {exc}") from exc
    raw = interpolate_env(raw)

    endpoints = {}
    for role, spec in raw.pop("endpoints", {}).items():
        try:
            endpoints[role] = BackendEndpoint(role=role, **spec)
        except (TypeError, ValueError) as exc:
            raise HarnessError(f"bad endpoint config for {role!r}: {exc}") from exc

    known = {f for f in RunConfig.__dataclass_fields__ if f != "endpoints"}
    unknown = set(raw) - known
    if unknown:
        raise HarnessError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "objectives" in raw:
        raw["objectives"] = tuple(raw["objectives"])
    return RunConfig(endpoints=endpoints, **raw)


def make_gateway(config: RunConfig, transport=None, clock=None) -> ModelGateway:
    cache_kwargs = {} if clock is None else {"clock": clock}
    cache = ResponseCache(config.cache_dir, config.cache_mode, **cache_kwargs)
    return ModelGateway(cache=cache, transport=transport,
                        max_prompt_chars=config.max_prompt_chars)
