"""Experiment configuration, config hashing and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .projection import ProjectionSystem
from .subgroup import SubgroupGraph
from .words import StepMeasure

KINDS = ("tail", "scaling", "second-moment", "distance-formula", "systole")

PARAM_DEFAULTS: dict[str, dict[str, Any]] = {
    "tail": {"n": 10_000, "trials": 10_000, "R_grid": [0, 2, 4], "t_grid": list(range(0, 13)), "coset": "1"},
    "scaling": {"n_list": [1000, 10_000, 100_000, 1_000_000], "trials": 1000, "C": 4.0},
    "second-moment": {"n": 10_000, "trials": 100_000, "eps1": 0.35, "eps2": None},
    "distance-formula": {"words": 10_000, "max_length": 10_000, "K": None},
    "systole": {"n_list": [1000, 10_000, 100_000, 1_000_000], "trials": 1, "c": 1.0, "noise": 0.0,
                "complements": 0, "K2": 5.0, "K3": 5.0, "D1": math.e, "delta": 0.05, "M_threshold": 10.0},
}


class ConfigError(ValueError):
    pass


@dataclass
class SystemSpec:
    flavor: str = "cyclic"
    generators: list[str] = field(default_factory=lambda: ["a"])
    rank: int = 2
    L: int = 1
    B: int = 1
    s: int = 2
    radius: int = 6
    tau: float | None = None

    def build(self) -> ProjectionSystem:
        Q = SubgroupGraph.from_generators(self.generators, self.rank)
        if self.flavor == "cyclic":
            return ProjectionSystem(Q, self.L, self.B, self.s, "cyclic")
        if self.flavor == "stallings":
            return ProjectionSystem.stallings(Q, self.L, self.B, self.s, self.tau)
        raise ConfigError(f"unknown flavor {self.flavor!r}")


@dataclass
class ExperimentConfig:
    kind: str
    system: SystemSpec = field(default_factory=SystemSpec)
    measure: dict[str, float] | None = None       # None means uniform on the generators
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out_dir: str = "runs"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        unknown = set(self.params) - set(PARAM_DEFAULTS[self.kind])
        if unknown:
            raise ConfigError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.system.flavor not in ("cyclic", "stallings"):
            raise ConfigError(f"unknown flavor {self.system.flavor!r}")
        try:
            self.build_measure()
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"invalid measure: {exc}") from exc

    def param(self, name: str):
        return self.params.get(name, PARAM_DEFAULTS[self.kind][name])

    def build_measure(self) -> StepMeasure:
        if self.measure is None:
            return StepMeasure.uniform(self.system.rank)
        return StepMeasure.from_mapping(self.measure, self.system.rank)

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("config must be a JSON object with a 'kind'")
        data = dict(data)
        try:
            system = SystemSpec(**data.pop("system", {}))
            return cls(system=system, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(data)

    @property
    def hash(self) -> str:
        """Identity of the computation: everything except where output goes and how many workers run it."""
        d = self.to_json()
        d.pop("out_dir")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class RunManifest:
    config_hash: str
    config: dict
    timestamp: str
    tool_version: str
    reports: dict[str, str]          # file name -> sha256 of its body
    wall_clock: float
    workers: int
    exit_code: int

    def dumps(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def digest(body: str) -> str:
    return hashlib.sha256(body.encode()).hexdigest()
