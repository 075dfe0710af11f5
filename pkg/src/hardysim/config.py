"""Run configuration read from a YAML file.

Example::

    geometry:
      U+: {t: 0.5, z: 1.0}
      D-: {t: 1.05, z: -1.0}
    frames:
      f_minus: -0.5
      f_plus: 0.5
    tolerance: 1.0e-9
    seed: 7
    format: json

Events not listed keep their default coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .core import TOL
from .spacetime import DEFAULT_GEOMETRY, F_MINUS, F_PLUS, Boost, Geometry


class ConfigError(Exception):
    """The configuration file is missing, unreadable or malformed."""


@dataclass(frozen=True)
class RunConfig:
    geometry: Geometry = DEFAULT_GEOMETRY
    f_minus: Boost = F_MINUS
    f_plus: Boost = F_PLUS
    tol: float = TOL
    seed: int = 0
    format: str = "json"

    def __post_init__(self):
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.format not in ("json", "table"):
            raise ValueError(f"unknown output format {self.format!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def with_overrides(self, **kw) -> RunConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
        data = yaml.safe_load(text) or {}
    except (OSError, UnicodeDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    try:
        frames = data.get("frames", {}) or {}
        kw = {}
        if "geometry" in data:
            kw["geometry"] = Geometry.from_mapping(data["geometry"] or {})
        if "f_minus" in frames:
            kw["f_minus"] = Boost(float(frames["f_minus"]))
        if "f_plus" in frames:
            kw["f_plus"] = Boost(float(frames["f_plus"]))
        if "tolerance" in data:
            kw["tol"] = float(data["tolerance"])
        if "seed" in data:
            kw["seed"] = int(data["seed"])
        if "format" in data:
            kw["format"] = str(data["format"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return RunConfig(**kw)
