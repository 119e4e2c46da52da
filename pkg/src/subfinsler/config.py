"""JSON run configuration for the command-line tool.

A config is one JSON object with a required "metric" section, an optional
"seed", and one optional section per subcommand.  Unknown keys are errors at
every level.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from typing import Any, Optional

from .geodesics import GeodesicState
from .indicatrix import IndicatrixProfile


class ConfigError(ValueError):
    pass


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class InitialCondition:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    theta: float = 0.0
    lam: float = 1.0

    @classmethod
    def parse(cls, data: Any, where: str) -> "InitialCondition":
        if isinstance(data, dict) and "lam" in data:
            raise ConfigError(f"unknown keys in {where}: ['lam'] (use 'lambda')")
        if isinstance(data, dict) and "lambda" in data:
            data = dict(data)
            data["lam"] = data.pop("lambda")
        ic = _build(cls, data, where)
        for f in fields(ic):
            v = getattr(ic, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{where}.{f.name} must be a finite number")
        return ic

    def state(self) -> GeodesicState:
        return GeodesicState(self.x, self.y, self.z, self.theta, self.lam)


def _initial_list(data: Any, where: str) -> tuple[InitialCondition, ...]:
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{where} must be an object or a non-empty list of objects")
    return tuple(InitialCondition.parse(d, f"{where}[{i}]") for i, d in enumerate(data))


@dataclass(frozen=True)
class InvariantsConfig:
    grid: int = 64

    def __post_init__(self):
        if not isinstance(self.grid, int) or self.grid < 1:
            raise ValueError("grid must be a positive integer")


@dataclass(frozen=True)
class GeodesicConfig:
    """length None integrates exactly one turn of theta."""

    initial: Any = field(default_factory=lambda: [{}])
    length: Optional[float] = None
    step: float = 1e-3
    tolerance: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "initial", _initial_list(self.initial, "geodesic.initial"))


@dataclass(frozen=True)
class ConjugateConfig:
    initial: Any = field(default_factory=dict)
    length: float = 10.0
    step: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "initial", InitialCondition.parse(self.initial, "conjugate.initial"))
        if not self.length > 0:
            raise ValueError("length must be positive")


SUITES = ("structure", "conserved", "oracle", "dido")


@dataclass(frozen=True)
class VerifyConfig:
    suite: str = "structure"
    case: str = "heisenberg"
    I: Any = 0.0
    points: int = 50
    fd_step: float = 1e-5
    initial: Any = None
    random_initial: int = 20
    length: float = 20.0
    perturbations: int = 20
    epsilon: float = 1e-3
    tolerance: Optional[float] = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"suite must be one of {SUITES}")
        if self.initial is not None:
            object.__setattr__(self, "initial", _initial_list(self.initial, "verify.initial"))
        Is = self.I if isinstance(self.I, list) else [self.I]
        object.__setattr__(self, "I", tuple(float(v) for v in Is))

    def threshold(self) -> float:
        if self.tolerance is not None:
            return float(self.tolerance)
        return {"structure": 1e-6, "conserved": 1e-8, "oracle": 1e-6, "dido": 1e-3}[self.suite]


@dataclass(frozen=True)
class DidoConfig:
    """mode "stationarity" perturbs geodesic projections; "search" runs the direct minimization."""

    mode: str = "stationarity"
    initial: Any = field(default_factory=dict)
    perturbations: int = 20
    epsilon: float = 1e-3
    nodes: int = 512
    area: Optional[float] = None
    node_count: int = 128
    clockwise: Optional[bool] = None

    def __post_init__(self):
        if self.mode not in ("stationarity", "search"):
            raise ValueError("mode must be 'stationarity' or 'search'")
        object.__setattr__(self, "initial", _initial_list(self.initial, "dido.initial"))


SECTIONS = {
    "invariants": InvariantsConfig,
    "geodesic": GeodesicConfig,
    "conjugate": ConjugateConfig,
    "verify": VerifyConfig,
    "dido": DidoConfig,
}


@dataclass(frozen=True)
class RunConfig:
    metric: IndicatrixProfile
    seed: int = 0
    sections: dict = field(default_factory=dict)

    def section(self, name: str):
        return self.sections.get(name) or SECTIONS[name]()

    @classmethod
    def from_dict(cls, data: Any) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"metric", "seed"} - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        if "metric" not in data:
            raise ConfigError("config needs a 'metric' section")
        if not isinstance(data["metric"], dict):
            raise ConfigError("metric must be a JSON object")
        try:
            metric = IndicatrixProfile.from_config(data["metric"])
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"metric: {exc}") from None
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        sections = {k: _build(SECTIONS[k], data[k], k) for k in SECTIONS if k in data}
        return cls(metric, seed, sections)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls.from_dict(data)
