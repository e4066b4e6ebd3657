"""Flat ``key = value`` experiment configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..estimators import RegressionModel
from ..point_process import DensityError, DensitySpec
from ..regions import RegionError, RegionSpec

EXPERIMENTS = (
    "voronoi-coverage", "gamma-ank", "gamma-two-point", "lemma52",
    "cell-volume", "add-one-diagnostic", "metric-d-convergence", "displacement-moment",
)
# "lemma52" is the historical name of "displacement-moment"; both are accepted


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d: int = 2
    n_grid: Tuple[int, ...] = (100, 1000)
    reps: int = 20
    density: str = "uniform"
    region: str = "ball:0.5,0.5,0.3"
    h: str = "linear"
    h_params: Tuple[float, ...] = (1.0, 0.0)
    sigma: float = 1.0
    scaled: bool = True
    noise: str = "gaussian"
    k: Tuple[int, ...] = (1, 2)
    mc_samples: int = 100_000
    seed: int = 0
    lambda_offset: float = 0.0
    k_max: int = 10
    threads: int = 1

    # -- derived objects --------------------------------------------------
    @property
    def omega(self) -> RegionSpec:
        return RegionSpec.unit_cube(self.d)

    def density_spec(self) -> DensitySpec:
        return parse_density(self.density, self.d)

    def region_spec(self) -> RegionSpec:
        return parse_region(self.region, self.d)

    def model(self) -> RegressionModel:
        return RegressionModel(self.h, self.h_params, self.sigma, self.scaled, self.noise)

    def lam(self, n: int) -> float:
        return n + self.lambda_offset * math.sqrt(n)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}; "
                              f"choose one of {', '.join(EXPERIMENTS)}")
        if self.d < 1:
            raise ConfigError("d", "dimension must be at least 1")
        if not self.n_grid:
            raise ConfigError("n_grid", "empty grid")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid", "must be strictly increasing")
        if self.n_grid[0] < 1:
            raise ConfigError("n_grid", "counts must be positive")
        if self.reps < 1:
            raise ConfigError("reps", "must be at least 1")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples", "must be at least 1")
        if not self.k or min(self.k) < 1:
            raise ConfigError("k", "neighbour ranks must be positive")
        if self.k_max < 1:
            raise ConfigError("k_max", "must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads", "must be at least 1")
        if self.sigma < 0:
            raise ConfigError("sigma", "must be non-negative")
        if self.noise not in ("gaussian", "uniform"):
            raise ConfigError("noise", "gaussian or uniform")
        try:
            dens = self.density_spec()
        except (DensityError, RegionError, ValueError) as exc:
            raise ConfigError("density", str(exc)) from None
        if self.experiment in ("voronoi-coverage", "gamma-ank", "gamma-two-point") and dens.lower_bound <= 0:
            raise ConfigError("density", "must be bounded away from zero on Ω")
        try:
            region = self.region_spec()
        except (RegionError, ValueError) as exc:
            raise ConfigError("region", str(exc)) from None
        if np.any(region.lower < -1e-12) or np.any(region.upper > 1 + 1e-12):
            raise ConfigError("region", "must lie inside the unit cube")
        try:
            model = self.model()
        except ValueError as exc:
            raise ConfigError("h", str(exc)) from None
        if model.family != "constant" and len(self.h_params) != self.d:
            raise ConfigError("h_params", f"need {self.d} values for dimension {self.d}")
        if self.experiment == "gamma-two-point" and (max(self.k) > 2 or min(self.k) > 1 or len(set(self.k)) < 2):
            raise ConfigError("k", "two-point estimator uses k = 1, 2")
        if self.experiment in ("gamma-ank", "gamma-two-point") and self.n_grid[0] <= max(self.k):
            raise ConfigError("n_grid", "need n > k")
        if self.experiment == "add-one-diagnostic" and self.n_grid[0] < 2:
            raise ConfigError("n_grid", "add-one costs need n >= 2")
        if self.experiment == "add-one-diagnostic" and self.lam(self.n_grid[0]) <= 0:
            raise ConfigError("lambda_offset", "λ(n) must stay positive")
        return self


_INT = {"d", "reps", "mc_samples", "seed", "k_max", "threads"}
_FLOAT = {"sigma", "lambda_offset"}
_INT_LIST = {"n_grid", "k"}
_FLOAT_LIST = {"h_params"}
_BOOL = {"scaled"}
_STR = {"experiment", "density", "region", "h", "noise"}
KEYS = _INT | _FLOAT | _INT_LIST | _FLOAT_LIST | _BOOL | _STR


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if key in _FLOAT:
            return float(raw)
        if key in _INT_LIST:
            return tuple(int(float(v)) for v in raw.replace(";", ",").split(",") if v.strip())
        if key in _FLOAT_LIST:
            return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
        if key in _BOOL:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None
    return raw


def parse_pairs(text: str, source: str = "<config>") -> Dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"{source}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def build_config(pairs: Dict[str, str], overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    values = {}
    for key, raw in pairs.items():
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, raw)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, val) if isinstance(val, str) else val
    if "experiment" not in values:
        raise ConfigError("experiment", "missing")
    return ExperimentConfig(**values).validate()


def load_config(path, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return build_config(parse_pairs(text, str(path)), overrides)


def to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# density and region strings
# ----------------------------------------------------------------------

def _floats(s: str) -> List[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def parse_density(text: str, d: int) -> DensitySpec:
    """``uniform`` | ``piecewise:v1,v2,...`` (slabs along x1) | ``gaussian:mu,scale``."""
    omega = RegionSpec.unit_cube(d)
    family, _, args = text.partition(":")
    family = family.strip()
    if family == "uniform":
        return DensitySpec.uniform(omega)
    if family == "piecewise":
        vals = np.asarray(_floats(args))
        if vals.size < 1:
            raise ValueError("piecewise density needs values")
        return DensitySpec.piecewise_constant(omega, vals.reshape((-1,) + (1,) * (d - 1)))
    if family == "gaussian":
        vals = _floats(args)
        if len(vals) != 2:
            raise ValueError("gaussian density needs mean,scale")
        return DensitySpec.truncated_gaussian(omega, vals[0], vals[1])
    raise ValueError(f"unknown density family {family!r}")


def parse_region(text: str, d: int) -> RegionSpec:
    """``omega`` | ``ball:c1,..,cd,r`` | ``box:lo1,..,lod,hi1,..,hid``."""
    kind, _, args = text.partition(":")
    kind = kind.strip()
    if kind == "omega":
        return RegionSpec.unit_cube(d)
    vals = _floats(args)
    if kind == "ball":
        if len(vals) != d + 1:
            raise ValueError(f"ball needs {d} centre coordinates and a radius")
        return RegionSpec.ball(vals[:d], vals[d])
    if kind == "box":
        if len(vals) != 2 * d:
            raise ValueError(f"box needs {2 * d} bounds")
        return RegionSpec.box(vals[:d], vals[d:])
    raise ValueError(f"unknown region kind {kind!r}")


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None}).validate()
