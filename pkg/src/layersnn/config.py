"""Run configuration documents (JSON) with strict key checking."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .engine import EngineConfig
from .plasticity import PlasticityConfig
from .topology import LayerSpec, TopologyConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StimulusConfig:
    """Stimulus source: a DVSE file path, or a generated moving bar when ``path`` is null."""

    path: str | None = None
    bar_width: int = 4
    speed_px_per_s: float = 200.0
    duration_ms: int = 2000
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    plasticity: PlasticityConfig = field(default_factory=PlasticityConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    stimulus: StimulusConfig = field(default_factory=StimulusConfig)
    steps: int = 1000
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _NESTED.get((cls, key))
        kwargs[key] = _build(sub, value, f"{where}.{key}") if sub else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_NESTED = {
    (RunConfig, "topology"): TopologyConfig,
    (RunConfig, "plasticity"): PlasticityConfig,
    (RunConfig, "engine"): EngineConfig,
    (RunConfig, "stimulus"): StimulusConfig,
    (TopologyConfig, "layer"): LayerSpec,
}


def parse_config(data: dict) -> RunConfig:
    return _build(RunConfig, data, "config")


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


def replace_section(config: RunConfig, section: str, **changes) -> RunConfig:
    return dataclasses.replace(config, **{section: dataclasses.replace(getattr(config, section), **changes)})
