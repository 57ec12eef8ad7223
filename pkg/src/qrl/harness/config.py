"""Experiment configuration: JSON with a schema version, validated at load."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import ConfigError

SCHEMA_VERSION = 1
KINDS = ("first-win-benchmark", "theorem1", "p-bound", "lemma-check", "qaa-check", "hijack-check")
AGENT_KINDS = ("rur", "rur_wor", "ps_lite")


@dataclass
class ExperimentConfig:
    kind: str
    experiment_id: str = ""
    env: dict = field(default_factory=lambda: {"maze": "line"})
    agent: dict = field(default_factory=lambda: {"kind": "rur"})
    n: int = 2
    M: int = 4
    M_max: int | None = None
    k: int = 1
    trials: int = 1
    seed: int = 0
    out: str | None = None
    thresholds: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if not self.experiment_id:
            self.experiment_id = self.kind
        self.validate()

    def validate(self) -> None:
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {self.schema!r} (expected {SCHEMA_VERSION})")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        for name in ("n", "M", "k", "trials"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.M_max is not None and (not isinstance(self.M_max, int) or self.M_max < self.M):
            raise ConfigError("M_max must be an integer >= M")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        kind = self.agent.get("kind", "rur")
        if kind not in AGENT_KINDS:
            raise ConfigError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")
        path = self.env.get("file")
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"environment file {path!r} does not exist")

    @property
    def m_max(self) -> int:
        return self.M_max if self.M_max is not None else self.M

    def to_json(self) -> dict:
        return asdict(self)


def load_config(source, apply_env: bool = True) -> ExperimentConfig:
    """Config from a dict, a JSON string, or a path; QRL_SEED overrides the base seed."""
    if isinstance(source, ExperimentConfig):
        data = source.to_json()
    elif isinstance(source, dict):
        data = dict(source)
    else:
        p = Path(source)
        if not p.is_file():
            raise ConfigError(f"config file {str(source)!r} does not exist")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from e
        env = data.get("env", {})
        if "file" in env and not Path(env["file"]).is_absolute():
            env["file"] = str((p.parent / env["file"]).resolve())
    known = set(ExperimentConfig.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config fields {sorted(extra)}")
    if "kind" not in data:
        raise ConfigError("config needs a 'kind'")
    if apply_env and os.environ.get("QRL_SEED"):
        try:
            data["seed"] = int(os.environ["QRL_SEED"])
        except ValueError as e:
            raise ConfigError(f"QRL_SEED must be an integer, got {os.environ['QRL_SEED']!r}") from e
    try:
        return ExperimentConfig(**data)
    except TypeError as e:
        raise ConfigError(str(e)) from e


__all__ = ["ExperimentConfig", "load_config", "SCHEMA_VERSION", "KINDS", "AGENT_KINDS"]
