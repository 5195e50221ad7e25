"""Experiment configuration: JSON file plus command-line overrides."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .hierarchy import HierarchyGeometry
from .laplacian import CouplingSequence, SpectralDimensionSpec, geometric_couplings
from .potential import BASES, PotentialModel
from .stats import FALLBACK_THETA, default_theta, r_of


class ConfigError(ValueError):
    """Invalid experiment configuration; carries one message per violation."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    n: int = 2
    k: int = 10
    k_list: list[int] | None = None
    r: int | None = None
    d: float | None = 0.5
    p: list[float] | None = None
    gamma: float = 0.0
    base: str = "cauchy"
    theta: float | None = None
    e: float = 0.0
    half_width: float = 1.0
    interval: list[float] | None = None
    energies: list[float] | None = None
    realizations: int = 500
    seed: int = 42
    workers: int = 1
    output: str = "results"
    epsilon: float | None = None
    z_re: float = 0.0
    z_im: float = 1.0
    grid_min: float = -3.0
    grid_max: float = 3.0
    grid_points: int = 61
    repetitions: int = 200
    max_sites: int = 4096

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown config key {key!r}" for key in unknown])
        return cls(**data)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read config file {path}: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError([f"config file {path} must hold a JSON object"])
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self, needs_matrix: bool = True) -> None:
        errs = []
        if not isinstance(self.n, int) or self.n < 2:
            errs.append(f"--n must be an integer >= 2 (got {self.n})")
        if self.k < 1:
            errs.append(f"--k must be >= 1 (got {self.k})")
        if self.k_list is not None and (not self.k_list or min(self.k_list) < 1):
            errs.append(f"--k-list must be a non-empty list of levels >= 1 (got {self.k_list})")
        if self.p is None:
            if self.d is None or not self.d > 0:
                errs.append(f"--d must be > 0 when no explicit --p list is given (got {self.d})")
        else:
            try:
                c = CouplingSequence.from_list(self.p)
                if c.r_max < max(self.levels()):
                    errs.append(f"--p lists {c.r_max} couplings but level {max(self.levels())} is requested")
            except ValueError as exc:
                errs.append(f"--p is not a valid coupling list: {exc}")
        if not self.gamma > -1:
            errs.append(f"--gamma must be > -1 (got {self.gamma})")
        if self.base not in BASES:
            errs.append(f"--base must be one of {', '.join(BASES)} (got {self.base!r})")
        if self.theta is not None and not 0 < self.theta < 1:
            errs.append(f"--theta must lie in (0, 1) (got {self.theta})")
        if self.r is not None and not 0 <= self.r <= self.k:
            errs.append(f"--r must satisfy 0 <= r <= k = {self.k} (got {self.r})")
        if not self.half_width > 0:
            errs.append(f"--half-width must be > 0 (got {self.half_width})")
        if self.interval is not None and (len(self.interval) != 2 or self.interval[0] > self.interval[1]):
            errs.append(f"--interval must be two numbers a <= b (got {self.interval})")
        if self.realizations < 1:
            errs.append(f"--realizations must be >= 1 (got {self.realizations})")
        if self.workers < 1:
            errs.append(f"--workers must be >= 1 (got {self.workers})")
        if self.epsilon is not None and not self.epsilon > 0:
            errs.append(f"--epsilon must be > 0 (got {self.epsilon})")
        if not self.z_im > 0:
            errs.append(f"--z-im must be > 0 (got {self.z_im})")
        if self.grid_points < 2 or not self.grid_min < self.grid_max:
            errs.append("energy grid needs --grid-points >= 2 and --grid-min < --grid-max")
        if needs_matrix and self.n ** max(self.levels()) > self.max_sites:
            errs.append(
                f"n**k = {self.n ** max(self.levels())} exceeds --max-sites {self.max_sites}; "
                "lower k or raise --max-sites"
            )
        if errs:
            raise ConfigError(errs)

    # Derived objects

    def levels(self) -> list[int]:
        return list(self.k_list) if self.k_list else [self.k]

    @property
    def geom(self) -> HierarchyGeometry:
        return HierarchyGeometry(self.n)

    @property
    def model(self) -> PotentialModel:
        return PotentialModel(self.base, self.gamma)

    @property
    def spec(self) -> SpectralDimensionSpec:
        return SpectralDimensionSpec(self.d, self.n)

    def couplings(self, levels: int | None = None) -> CouplingSequence:
        if self.p is not None:
            return CouplingSequence.from_list(self.p)
        return geometric_couplings(self.spec, max(levels or 1, max(self.levels()), 1))

    def resolved_theta(self) -> float:
        """Explicit theta, else the midpoint of the admissible interval, else 0.5."""
        if self.theta is not None:
            return self.theta
        if self.d is None:
            return FALLBACK_THETA
        theta = default_theta(self.gamma, self.d)
        return FALLBACK_THETA if theta is None else theta

    def r_for(self, k: int) -> int:
        return r_of(k, self.resolved_theta())

    def rescaled_interval(self) -> tuple[float, float]:
        if self.interval is not None:
            return float(self.interval[0]), float(self.interval[1])
        return -self.half_width, self.half_width

    @property
    def z(self) -> complex:
        return complex(self.z_re, self.z_im)

    def grid(self) -> list[float]:
        step = (self.grid_max - self.grid_min) / (self.grid_points - 1)
        return [self.grid_min + i * step for i in range(self.grid_points)]


def _nan_to_none(obj):
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    elif isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Stable JSON: sorted keys, no NaN literals, trailing newline."""
    return json.dumps(_nan_to_none(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
