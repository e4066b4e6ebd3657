"""Regions of R^d given by indicator oracles.

Every region carries an axis-aligned bounding box; boxes, balls and unions of
boxes know their exact volume, an arbitrary indicator only if told.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .rng import RngLike, as_generator


def unit_ball_volume(d: int) -> float:
    """Lebesgue measure of the unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


class RegionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RegionSpec:
    """A bounded Borel set described by its indicator.

    Use the constructors :meth:`box`, :meth:`ball`, :meth:`union_of_boxes`
    and :meth:`indicator` rather than instantiating directly.
    """

    kind: str
    lower: np.ndarray
    upper: np.ndarray
    exact_volume: Optional[float] = None
    params: dict = field(default_factory=dict)
    _indicator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    # -- constructors -------------------------------------------------
    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "RegionSpec":
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise RegionError("box bounds must be 1-d arrays of equal length")
        if not np.all(hi > lo):
            raise RegionError(f"degenerate box: lower={lo}, upper={hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        return cls("axis-box", lo, hi, float(np.prod(hi - lo)))

    @classmethod
    def unit_cube(cls, d: int) -> "RegionSpec":
        return cls.box(np.zeros(d), np.ones(d))

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "RegionSpec":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if radius <= 0:
            raise RegionError("ball radius must be positive")
        d = c.size
        return cls(
            "ball", c - radius, c + radius, unit_ball_volume(d) * radius ** d,
            params={"center": c, "radius": float(radius)},
        )

    @classmethod
    def union_of_boxes(cls, boxes: Sequence[Tuple[Sequence[float], Sequence[float]]]) -> "RegionSpec":
        los = np.array([np.atleast_1d(b[0]) for b in boxes], dtype=float)
        his = np.array([np.atleast_1d(b[1]) for b in boxes], dtype=float)
        if los.ndim != 2 or los.shape != his.shape or len(los) == 0:
            raise RegionError("union_of_boxes needs at least one box of consistent dimension")
        if not np.all(his > los):
            raise RegionError("degenerate box in union")
        region = cls("finite-union-of-boxes", los.min(axis=0), his.max(axis=0), None,
                     params={"lowers": los, "uppers": his})
        object.__setattr__(region, "exact_volume", _union_volume(los, his))
        return region

    @classmethod
    def indicator(cls, fn: Callable[[np.ndarray], np.ndarray], lower: Sequence[float],
                  upper: Sequence[float], exact_volume: Optional[float] = None) -> "RegionSpec":
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        return cls("indicator-oracle", lo, hi, exact_volume, _indicator=fn)

    # -- queries --------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def is_box(self) -> bool:
        return self.kind == "axis-box"

    @property
    def bbox_volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def volume(self) -> float:
        if self.exact_volume is None:
            raise RegionError(f"{self.kind} region has no known volume")
        return self.exact_volume

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Vectorised indicator; ``x`` has shape ``(m, d)`` or ``(d,)``."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dim:
            raise RegionError(f"dimension mismatch: region d={self.dim}, points d={x.shape[1]}")
        if self.kind == "axis-box":
            out = np.all((x > self.lower) & (x < self.upper), axis=1)
        elif self.kind == "ball":
            c, r = self.params["center"], self.params["radius"]
            out = np.sum((x - c) ** 2, axis=1) <= r * r
        elif self.kind == "finite-union-of-boxes":
            los, his = self.params["lowers"], self.params["uppers"]
            inside = (x[:, None, :] > los[None]) & (x[:, None, :] < his[None])
            out = np.any(np.all(inside, axis=2), axis=1)
        else:
            out = np.asarray(self._indicator(x), dtype=bool).reshape(len(x))
        return bool(out[0]) if single else out

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def sample_uniform(self, m: int, rng: RngLike) -> np.ndarray:
        """``m`` i.i.d. uniform points on the region (rejection from the box)."""
        gen = as_generator(rng)
        if self.is_box:
            return self.lower + (self.upper - self.lower) * gen.random((m, self.dim))
        out = np.empty((m, self.dim))
        filled = 0
        while filled < m:
            batch = max(64, int(1.2 * (m - filled) * self.bbox_volume / (self.exact_volume or self.bbox_volume)))
            z = self.lower + (self.upper - self.lower) * gen.random((batch, self.dim))
            z = z[self.contains(z)]
            take = min(len(z), m - filled)
            out[filled:filled + take] = z[:take]
            filled += take
        return out

    def scaled(self, center: np.ndarray, factor: float) -> "RegionSpec":
        """Image of the region under ``y -> center + factor * (y - center)``."""
        c = np.asarray(center, dtype=float)
        vol = None if self.exact_volume is None else self.exact_volume * factor ** self.dim
        if self.kind == "axis-box":
            return RegionSpec.box(c + factor * (self.lower - c), c + factor * (self.upper - c))
        if self.kind == "ball":
            return RegionSpec.ball(c + factor * (self.params["center"] - c), factor * self.params["radius"])
        if self.kind == "finite-union-of-boxes":
            los, his = self.params["lowers"], self.params["uppers"]
            return RegionSpec.union_of_boxes(list(zip(c + factor * (los - c), c + factor * (his - c))))
        inner = self._indicator
        return RegionSpec.indicator(lambda y: inner(c + (np.asarray(y) - c) / factor),
                                    c + factor * (self.lower - c), c + factor * (self.upper - c), vol)

    def __repr__(self):
        return f"RegionSpec({self.kind}, lower={self.lower.tolist()}, upper={self.upper.tolist()})"


def _union_volume(los: np.ndarray, his: np.ndarray) -> float:
    # exact: decompose along the sorted distinct breakpoints of each axis
    d = los.shape[1]
    axes = [np.unique(np.concatenate([los[:, j], his[:, j]])) for j in range(d)]
    mids = [0.5 * (a[1:] + a[:-1]) for a in axes]
    widths = [np.diff(a) for a in axes]
    total = 0.0
    for idx in itertools.product(*[range(len(m)) for m in mids]):
        p = np.array([mids[j][i] for j, i in enumerate(idx)])
        if np.any(np.all((p > los) & (p < his), axis=1)):
            total += float(np.prod([widths[j][i] for j, i in enumerate(idx)]))
    return total
