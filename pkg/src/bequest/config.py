"""Scenario configuration files.

A scenario is a JSON object::

    {
      "law": {"type": "gamma2", "mu": 0.05},
      "r": 0.02, "theta": 0.0,
      "grid": {"w_points": 21, "t_min": 0, "t_max": 100, "t_points": 21},
      "output": {"path": "out.csv", "format": "csv"},
      "seed": 1
    }

The law may also be given flat (``"law": "gamma2", "mu": 0.05``).  Law tags
are ``constant`` (mu), ``demoivre`` (T), ``gamma2`` (mu), ``linearpdf``
(r, T; r defaults to the scenario's force of interest) and ``tabulated``
(``csv`` path relative to the config file, or ``knots``/``values``, plus
optional ``interpolation`` and ``extrapolation``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .actuarial import ProblemSpec
from .errors import DomainError
from .mortality import ConstantForce, DeMoivre, GammaTwo, LinearPdf, MortalityLaw, Tabulated

LAW_TAGS = ("constant", "demoivre", "gamma2", "linearpdf", "tabulated")


@dataclass(frozen=True)
class GridConfig:
    w_points: int = 21
    t_min: float = 0.0
    t_max: float = 50.0
    t_points: int = 11

    def __post_init__(self):
        if self.w_points < 2 or self.t_points < 2:
            raise DomainError("grid axes need at least 2 points")
        if not 0.0 <= self.t_min <= self.t_max:
            raise DomainError(f"need 0 <= t_min <= t_max, got [{self.t_min}, {self.t_max}]")

    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.t_points)


@dataclass(frozen=True)
class OutputConfig:
    path: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise DomainError(f"output format must be csv or json, got {self.format!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    law: MortalityLaw
    r: float
    theta: float = 0.0
    grid: GridConfig = GridConfig()
    output: OutputConfig = OutputConfig()
    seed: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if math.isfinite(self.law.horizon) and self.grid.t_max >= self.law.horizon:
            raise DomainError(f"t_max must be below the horizon {self.law.horizon}")

    @property
    def spec(self) -> ProblemSpec:
        return ProblemSpec(self.law, self.r, self.theta)


def _num(d, key, default=None):
    if key not in d:
        if default is None:
            raise DomainError(f"missing required field {key!r}")
        return default
    try:
        return float(d[key])
    except (TypeError, ValueError) as exc:
        raise DomainError(f"field {key!r} must be a number, got {d[key]!r}") from exc


def parse_law(desc: dict, r: float = 0.0, base: Path | None = None) -> MortalityLaw:
    tag = desc.get("type")
    if tag == "constant":
        return ConstantForce(_num(desc, "mu"))
    if tag == "demoivre":
        return DeMoivre(_num(desc, "T"))
    if tag == "gamma2":
        return GammaTwo(_num(desc, "mu"))
    if tag == "linearpdf":
        return LinearPdf(_num(desc, "r", r), _num(desc, "T"))
    if tag == "tabulated":
        interp = desc.get("interpolation", "constant")
        extrap = desc.get("extrapolation", "constant")
        if "csv" in desc:
            path = Path(desc["csv"])
            if base is not None and not path.is_absolute():
                path = base / path
            try:
                return Tabulated.from_csv(path, interp, extrap)
            except OSError as exc:
                raise DomainError(f"cannot read hazard table: {exc}") from exc
        return Tabulated(tuple(desc["knots"]), tuple(desc["values"]), interp, extrap)
    raise DomainError(f"unknown law tag {tag!r}; expected one of {', '.join(LAW_TAGS)}")


def scenario_from_dict(data: dict[str, Any], base: Path | None = None) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise DomainError("config must be a JSON object")
    r = _num(data, "r")
    law = data.get("law")
    if isinstance(law, str):
        desc = {k: v for k, v in data.items() if k not in ("law", "r", "theta", "grid", "output", "seed")}
        desc["type"] = law
    elif isinstance(law, dict):
        desc = law
    else:
        raise DomainError("config needs a 'law' tag or object")
    grid = GridConfig(**data.get("grid", {}))
    out = data.get("output", {})
    output = OutputConfig(out) if isinstance(out, str) else OutputConfig(**out)
    known = {"law", "r", "theta", "grid", "output", "seed"}
    extra = {k: v for k, v in data.items() if k not in known}
    return ScenarioConfig(
        parse_law(desc, r, base), r, _num(data, "theta", 0.0), grid, output, int(data.get("seed", 0)), extra
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise DomainError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed JSON in {path}: {exc}") from exc
    try:
        return scenario_from_dict(data, path.parent)
    except (TypeError, KeyError) as exc:
        raise DomainError(f"bad config field: {exc}") from exc
