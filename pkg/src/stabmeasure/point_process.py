"""Binomial and Poisson point configurations, marks, dilations and the metric D.

A :class:`PointSet` is an ordered, immutable array of locations with optional
real marks. Order matters: ``X.prefix(n - 1)`` is the sample before the n-th
point was added, which the add-one costs rely on.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import erf

from .regions import RegionSpec, unit_ball_volume
from .rng import RngLike, RngStream, as_generator

__all__ = [
    "MarkedPoint", "PointSet", "DensitySpec", "DensityError",
    "sample_binomial", "sample_poisson_homogeneous", "attach_marks",
    "rescale", "metric_D", "MetricD", "unit_ball_volume",
]

MIN_ACCEPTANCE = 1e-6


class DensityError(ValueError):
    pass


class MarkedPoint(NamedTuple):
    location: np.ndarray
    mark: Optional[float] = None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite ordered configuration in R^d, optionally marked.

    Parameters
    ----------
    locations
        Array of shape ``(n, d)``.
    marks
        ``None`` for an unmarked set, otherwise shape ``(n,)``.
    """

    locations: np.ndarray
    marks: Optional[np.ndarray] = None

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        if loc.ndim != 2:
            raise ValueError(f"locations must have shape (n, d), got {loc.shape}")
        if loc.shape[1] < 1:
            raise ValueError("dimension must be at least 1")
        if not np.all(np.isfinite(loc)):
            raise ValueError("locations must be finite")
        object.__setattr__(self, "locations", _frozen(loc))
        if self.marks is not None:
            mk = np.asarray(self.marks, dtype=float).reshape(-1)
            if mk.shape[0] != loc.shape[0]:
                raise ValueError("marks length differs from number of points")
            if not np.all(np.isfinite(mk)):
                raise ValueError("marks must be finite")
            object.__setattr__(self, "marks", _frozen(mk))

    @classmethod
    def empty(cls, d: int, marked: bool = False) -> "PointSet":
        return cls(np.empty((0, d)), np.empty(0) if marked else None)

    @classmethod
    def from_points(cls, points: Sequence, d: Optional[int] = None) -> "PointSet":
        """Build from a list of coordinates (1-d lists or scalars)."""
        if len(points) == 0:
            if d is None:
                raise ValueError("dimension required for an empty set")
            return cls.empty(d)
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        return cls(arr)

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def d(self) -> int:
        return self.locations.shape[1]

    @property
    def is_marked(self) -> bool:
        return self.marks is not None

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> MarkedPoint:
        mark = None if self.marks is None else float(self.marks[i])
        return MarkedPoint(self.locations[i], mark)

    def prefix(self, m: int) -> "PointSet":
        """The first ``m`` points ``X_1, ..., X_m``."""
        return PointSet(self.locations[:m], None if self.marks is None else self.marks[:m])

    def take(self, idx) -> "PointSet":
        return PointSet(self.locations[idx], None if self.marks is None else self.marks[idx])

    def with_marks(self, marks: Optional[np.ndarray]) -> "PointSet":
        return PointSet(self.locations, marks)

    def adjoin(self, point: MarkedPoint) -> "PointSet":
        """Append a point at the end of the order."""
        loc = np.atleast_1d(np.asarray(point.location, dtype=float)).reshape(1, self.d)
        if self.marks is None:
            if point.mark is not None:
                raise ValueError("cannot adjoin a marked point to an unmarked set")
            return PointSet(np.vstack([self.locations, loc]))
        if point.mark is None:
            raise ValueError("marked set requires a marked point")
        return PointSet(np.vstack([self.locations, loc]), np.append(self.marks, point.mark))

    def union(self, other: "PointSet") -> "PointSet":
        if other.d != self.d or other.is_marked != self.is_marked:
            raise ValueError("incompatible point sets")
        marks = None if self.marks is None else np.concatenate([self.marks, other.marks])
        return PointSet(np.vstack([self.locations, other.locations]), marks)

    def __repr__(self):
        return f"PointSet(n={self.n}, d={self.d}, marked={self.is_marked})"


# ----------------------------------------------------------------------
# densities
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensitySpec:
    """A probability density on a bounded support.

    ``upper_bound`` is the envelope used by the rejection sampler and
    ``lower_bound`` the infimum of the density on its support (0 when
    unknown).
    """

    family: str
    support: RegionSpec
    params: dict
    lower_bound: float
    upper_bound: float

    @property
    def dim(self) -> int:
        return self.support.dim

    # -- constructors -----------------------------------------------
    @classmethod
    def uniform(cls, support: RegionSpec) -> "DensitySpec":
        vol = support.volume
        dens = cls("uniform-on-region", support, {"value": 1.0 / vol}, 1.0 / vol, 1.0 / vol)
        dens._check_normalised()
        return dens

    @classmethod
    def piecewise_constant(cls, box: RegionSpec, values, normalise: bool = False) -> "DensitySpec":
        """Constant on each cell of a regular grid over ``box``.

        ``values`` has one axis per dimension; axis j splits coordinate j
        into ``values.shape[j]`` equal slabs.
        """
        if not box.is_box:
            raise DensityError("piecewise-constant densities live on an axis box")
        vals = np.array(values, dtype=float)
        if vals.ndim != box.dim:
            vals = vals.reshape(vals.shape + (1,) * (box.dim - vals.ndim))
        if np.any(vals < 0):
            raise DensityError("density values must be non-negative")
        if normalise:
            vals = vals / (vals.mean() * box.volume)
        vals.flags.writeable = False
        total = float(vals.mean() * box.volume)
        if abs(total - 1.0) > 1e-9:
            raise DensityError(f"density integrates to {total:.6f}, not 1")
        return cls("piecewise-constant-on-grid", box, {"values": vals},
                   float(vals.min()), float(vals.max()))

    @classmethod
    def truncated_gaussian(cls, box: RegionSpec, mean, scale: float) -> "DensitySpec":
        """Isotropic Gaussian bump restricted to ``box`` and renormalised."""
        if not box.is_box:
            raise DensityError("truncated-smooth densities live on an axis box")
        mu = np.broadcast_to(np.asarray(mean, dtype=float), (box.dim,)).copy()
        s = float(scale)
        if s <= 0:
            raise DensityError("scale must be positive")
        z = (box.upper - mu) / (s * math.sqrt(2)), (box.lower - mu) / (s * math.sqrt(2))
        mass = float(np.prod(0.5 * (erf(z[0]) - erf(z[1]))))
        norm = mass * (2 * math.pi * s * s) ** (box.dim / 2)
        # extreme values over the box: nearest and farthest corner-wise points
        near = np.clip(mu, box.lower, box.upper)
        far = np.where(np.abs(box.lower - mu) > np.abs(box.upper - mu), box.lower, box.upper)
        peak = math.exp(-np.sum((near - mu) ** 2) / (2 * s * s)) / norm
        low = math.exp(-np.sum((far - mu) ** 2) / (2 * s * s)) / norm
        dens = cls("truncated-smooth", box, {"mean": mu, "scale": s, "norm": norm}, low, peak)
        dens._check_normalised()
        return dens

    # -- evaluation ---------------------------------------------------
    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = self.support.contains(x)
        if self.family == "uniform-on-region":
            out = np.full(len(x), self.params["value"])
        elif self.family == "piecewise-constant-on-grid":
            vals = self.params["values"]
            rel = (x - self.support.lower) / (self.support.upper - self.support.lower)
            cell = np.clip((rel * np.array(vals.shape)).astype(int), 0, np.array(vals.shape) - 1)
            out = vals[tuple(cell.T)]
        else:
            mu, s = self.params["mean"], self.params["scale"]
            out = np.exp(-np.sum((x - mu) ** 2, axis=1) / (2 * s * s)) / self.params["norm"]
        return np.where(inside, out, 0.0)

    def mass(self, region: RegionSpec, m: int = 200_000, rng: RngLike = 0) -> float:
        """Probability of ``region``: exact for boxes on a box support, else Monte Carlo."""
        if region.is_box and self.support.is_box:
            return self._box_mass(region)
        z = self.support.sample_uniform(m, rng)
        return float(self.support.volume * np.mean(self.pdf(z) * region.contains(z)))

    def _box_mass(self, box: RegionSpec) -> float:
        lo = np.maximum(box.lower, self.support.lower)
        hi = np.minimum(box.upper, self.support.upper)
        if np.any(hi <= lo):
            return 0.0
        if self.family == "uniform-on-region":
            return float(self.params["value"] * np.prod(hi - lo))
        if self.family == "piecewise-constant-on-grid":
            vals = self.params["values"]
            overlaps = []
            for j, size in enumerate(vals.shape):
                edges = np.linspace(self.support.lower[j], self.support.upper[j], size + 1)
                overlaps.append(np.clip(np.minimum(edges[1:], hi[j]) - np.maximum(edges[:-1], lo[j]), 0, None))
            weight = overlaps[0]
            for ov in overlaps[1:]:
                weight = np.multiply.outer(weight, ov)
            return float(np.sum(vals * weight))
        mu, s = self.params["mean"], self.params["scale"]
        z = s * math.sqrt(2)
        per_axis = 0.5 * (erf((hi - mu) / z) - erf((lo - mu) / z))
        return float(np.prod(per_axis) * (2 * math.pi * s * s) ** (self.dim / 2) / self.params["norm"])

    def _check_normalised(self, m: int = 20_000, tol_se: float = 6.0):
        z = self.support.sample_uniform(m, RngStream(0x5EED))
        vals = self.pdf(z) * self.support.volume
        se = vals.std() / math.sqrt(m)
        if abs(vals.mean() - 1.0) > tol_se * se + 1e-9:
            raise DensityError(f"density integrates to {vals.mean():.6f}, not 1")


# ----------------------------------------------------------------------
# samplers
# ----------------------------------------------------------------------

def sample_binomial(n: int, density: DensitySpec, rng: RngLike) -> PointSet:
    """``n`` i.i.d. unmarked points with the given density.

    Rejection sampling against the bounding box of the support, using the
    density's upper bound as envelope.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    gen = as_generator(rng)
    d = density.dim
    if n == 0:
        return PointSet.empty(d)
    lo, hi = density.support.lower, density.support.upper
    accept_rate = 1.0 / (density.upper_bound * density.support.bbox_volume)
    if accept_rate < MIN_ACCEPTANCE:
        raise DensityError(f"rejection acceptance rate {accept_rate:.3g} below {MIN_ACCEPTANCE:g}; "
                           "density is badly scaled")
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        batch = int(1.1 * (n - filled) / accept_rate) + 16
        z = lo + (hi - lo) * gen.random((batch, d))
        u = gen.random(batch) * density.upper_bound
        z = z[u < density.pdf(z)]
        take = min(len(z), n - filled)
        out[filled:filled + take] = z[:take]
        filled += take
    return PointSet(out)


def sample_poisson_homogeneous(intensity: float, box: RegionSpec, rng: RngLike) -> PointSet:
    """Homogeneous Poisson process of the given intensity on an axis box."""
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    if not box.is_box:
        raise ValueError("homogeneous sampler needs an axis box; "
                         "use sample_binomial for other supports")
    gen = as_generator(rng)
    count = gen.poisson(intensity * box.volume)
    return PointSet(box.lower + (box.upper - box.lower) * gen.random((count, box.dim)))


def attach_marks(X: PointSet, noise: str, sigma: float, rng: RngLike) -> PointSet:
    """Give every point an i.i.d. mean-zero mark of variance ``sigma**2``.

    ``noise`` is ``"gaussian"`` or ``"uniform"`` (centred uniform).
    """
    if X.is_marked:
        raise ValueError("point set is already marked")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    gen = as_generator(rng)
    if noise == "gaussian":
        marks = sigma * gen.standard_normal(X.n)
    elif noise in ("uniform", "uniform-centered"):
        marks = sigma * math.sqrt(3.0) * gen.uniform(-1.0, 1.0, X.n)
    else:
        raise ValueError(f"unknown noise distribution {noise!r}")
    return X.with_marks(marks)


def rescale(X: PointSet, center, lam: float) -> PointSet:
    """Dilate locations about ``center`` by ``lam ** (1/d)``; marks unchanged."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.size != X.d:
        raise ValueError("center dimension does not match the point set")
    if lam <= 0:
        raise ValueError("scale must be positive")
    factor = lam ** (1.0 / X.d)
    return PointSet(c + factor * (X.locations - c), X.marks)


# ----------------------------------------------------------------------
# metric on locally finite sets
# ----------------------------------------------------------------------

class MetricD(NamedTuple):
    """Value of D; ``value`` is ``math.inf`` when the sets differ inside B_1."""

    value: float
    censored: bool
    agree_radius: int


def _keys(X: PointSet) -> Counter:
    marks = [None] * X.n if X.marks is None else X.marks.tolist()
    return Counter(zip(map(tuple, X.locations.tolist()), marks))


def metric_D(X: PointSet, Y: PointSet, k_max: int) -> MetricD:
    """Reciprocal of the largest integer K with X and Y agreeing on B_K.

    Balls are closed and centred at the origin; marks are compared exactly.
    If the sets agree on every B_K with K <= ``k_max`` the result is
    ``1/k_max`` flagged as censored.
    """
    if X.d != Y.d:
        raise ValueError("dimension mismatch")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    kx, ky = _keys(X), _keys(Y)
    diff = (kx - ky) + (ky - kx)
    if not diff:
        return MetricD(1.0 / k_max, True, k_max)
    r = min(math.hypot(*loc) for loc, _ in diff)
    # B_K contains the nearest disagreement iff r <= K
    agree = math.ceil(r) - 1
    if agree >= k_max:
        return MetricD(1.0 / k_max, True, k_max)
    if agree < 1:
        return MetricD(math.inf, False, 0)
    return MetricD(1.0 / agree, False, agree)
