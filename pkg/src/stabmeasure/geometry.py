"""Exact nearest-neighbour queries, Voronoi cell volumes and cone certificates.

Neighbour queries go through a k-d tree for speed but the final ranking is
always recomputed from squared Euclidean distances evaluated by
:func:`squared_distances`, with ties broken by the lowest point index. Rows
whose k-th distance is (numerically) tied with a point the tree did not
return are re-resolved from a ball query, so results agree exactly with
:func:`knn_bruteforce`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .point_process import PointSet
from .regions import RegionSpec
from .rng import RngLike

# neighbour slot meaning "the query point itself" (fewer than k candidates)
SELF = -1

_TIE_RTOL = 1e-9


def squared_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """|points - q|^2, broadcasting ``q`` against the last axis."""
    diff = points - q
    return np.einsum("...j,...j->...", diff, diff)


def knn_bruteforce(locations: np.ndarray, q: np.ndarray, k: int,
                   exclude: Optional[int] = None) -> np.ndarray:
    """Reference k-NN by full sort; same tie rule and padding as :class:`KnnIndex`."""
    locations = np.asarray(locations, dtype=float)
    d2 = squared_distances(locations, np.asarray(q, dtype=float))
    idx = np.arange(len(locations))
    if exclude is not None and 0 <= exclude < len(locations):
        keep = idx != exclude
        d2, idx = d2[keep], idx[keep]
    order = np.lexsort((idx, d2))[:k]
    out = np.full(k, SELF, dtype=np.int64)
    out[:len(order)] = idx[order]
    return out


class KnnIndex:
    """Exact k-nearest-neighbour index over the locations of a point set."""

    def __init__(self, points):
        if isinstance(points, PointSet):
            self.points = points
            loc = points.locations
        else:
            loc = np.asarray(points, dtype=float)
            if loc.ndim == 1:
                loc = loc[:, None]
            self.points = PointSet(loc)
            loc = self.points.locations
        self.locations = loc
        self._tree = cKDTree(loc) if len(loc) else None

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def d(self) -> int:
        return self.locations.shape[1]

    def query(self, queries: np.ndarray, k: int,
              exclude: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Bulk k-NN.

        Parameters
        ----------
        queries
            Array ``(m, d)``.
        k
            Number of neighbours, ``k >= 1``.
        exclude
            Optional integer array ``(m,)``; row r never returns
            ``exclude[r]`` (use -1 for no exclusion).

        Returns
        -------
        idx, d2
            ``(m, k)`` neighbour indices sorted by (distance, index), padded
            with :data:`SELF`, and the matching squared distances (0 for
            padding slots).
        """
        if k < 1:
            raise ValueError("k must be at least 1")
        q = np.atleast_2d(np.asarray(queries, dtype=float))
        if q.shape[1] != self.d:
            raise ValueError(f"query dimension {q.shape[1]} != index dimension {self.d}")
        m, n = len(q), self.n
        out_idx = np.full((m, k), SELF, dtype=np.int64)
        out_d2 = np.zeros((m, k))
        if n == 0 or m == 0:
            return out_idx, out_d2
        excl = None if exclude is None else np.broadcast_to(np.asarray(exclude, dtype=np.int64), (m,))
        kk = min(k + 1 + (excl is not None), n)
        _, idx = self._tree.query(q, k=kk)
        idx = idx.reshape(m, kk).astype(np.int64)
        d2 = squared_distances(self.locations[idx], q[:, None, :])
        if excl is not None:
            d2 = np.where(idx == excl[:, None], np.inf, d2)
        order = np.lexsort((idx, d2), axis=-1)
        idx = np.take_along_axis(idx, order, axis=1)
        d2 = np.take_along_axis(d2, order, axis=1)
        valid = np.isfinite(d2)
        kv = min(k, kk)
        out_idx[:, :kv] = np.where(valid[:, :kv], idx[:, :kv], SELF)
        out_d2[:, :kv] = np.where(valid[:, :kv], d2[:, :kv], 0.0)
        if kk < n:
            # the k-th slot is settled when the next candidate is strictly farther
            kth = d2[:, k - 1]
            nxt = d2[:, k]
            unsure = ~(nxt > kth * (1 + _TIE_RTOL) + 1e-300)
            for r in np.flatnonzero(unsure):
                out_idx[r], out_d2[r] = self._resolve(q[r], k, -1 if excl is None else int(excl[r]), kth[r])
        return out_idx, out_d2

    def _resolve(self, q, k, excl, kth_d2):
        radius = math.sqrt(kth_d2) * (1 + 1e-7) + 1e-12
        cand = np.asarray(self._tree.query_ball_point(q, radius), dtype=np.int64)
        cand = cand[cand != excl]
        d2 = squared_distances(self.locations[cand], q)
        order = np.lexsort((cand, d2))[:k]
        idx = np.full(k, SELF, dtype=np.int64)
        dd = np.zeros(k)
        idx[:len(order)] = cand[order]
        dd[:len(order)] = d2[order]
        return idx, dd


def knn(index: KnnIndex, query, k: int, exclude: Optional[int] = None) -> np.ndarray:
    """Indices of the k nearest points to a single query (see :meth:`KnnIndex.query`)."""
    idx, _ = index.query(np.atleast_1d(np.asarray(query, dtype=float))[None, :], k,
                         None if exclude is None else np.array([exclude]))
    return idx[0]


def nearest_nucleus(z, index: KnnIndex):
    """Index of the nearest nucleus; lowest index on ties.

    ``z`` may be a single point ``(d,)`` or a batch ``(m, d)``.
    """
    if index.n == 0:
        raise ValueError("nearest_nucleus on an empty point set")
    z = np.asarray(z, dtype=float)
    if z.ndim == 1 and index.d == 1 and z.size > 1:
        z = z[:, None]
    single = z.ndim == 1
    idx, _ = index.query(np.atleast_2d(z), 1)
    return int(idx[0, 0]) if single else idx[:, 0]


# ----------------------------------------------------------------------
# Voronoi cell volumes
# ----------------------------------------------------------------------

def cell_labels(X, z: np.ndarray) -> np.ndarray:
    """Nearest-nucleus label for every sample point in ``z``."""
    index = X if isinstance(X, KnnIndex) else KnnIndex(X)
    return nearest_nucleus(np.atleast_2d(z), index)


def voronoi_volumes_mc(X: PointSet, omega: RegionSpec, m: int, rng: RngLike,
                       return_samples: bool = False):
    """Monte Carlo volumes of every cell V(X_i; X) ∩ Ω from one shared batch.

    The volumes sum to |Ω| exactly because each sample is assigned to
    exactly one nucleus.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    z = omega.sample_uniform(m, rng)
    labels = cell_labels(X, z)
    vols = np.bincount(labels, minlength=X.n) * (omega.volume / m)
    if return_samples:
        return vols, z, labels
    return vols


def voronoi_volume_mc(i: int, X: PointSet, omega: RegionSpec, m: int, rng: RngLike) -> float:
    """Unbiased MC estimate of |V(X_i; X) ∩ Ω|."""
    return float(voronoi_volumes_mc(X, omega, m, rng)[i])


def _as_interval(omega) -> Tuple[float, float]:
    if isinstance(omega, RegionSpec):
        if omega.dim != 1 or not omega.is_box:
            raise ValueError("exact 1-d volumes need an interval region")
        return float(omega.lower[0]), float(omega.upper[0])
    a, b = omega
    return float(a), float(b)


def voronoi_intervals_1d(X: PointSet, omega) -> Tuple[np.ndarray, np.ndarray]:
    """Left and right ends of every 1-d cell clipped to the interval Ω.

    Coincident nuclei: the lowest index owns the cell, the others get an
    empty interval.
    """
    if X.d != 1:
        raise ValueError("exact Voronoi cells are only available for d = 1")
    a, b = _as_interval(omega)
    x = X.locations[:, 0]
    n = len(x)
    order = np.lexsort((np.arange(n), x))
    xs = x[order]
    owner = np.ones(n, dtype=bool)
    owner[1:] = xs[1:] != xs[:-1]
    ux = xs[owner]
    mids = 0.5 * (ux[1:] + ux[:-1])
    lo_u = np.concatenate([[-np.inf], mids])
    hi_u = np.concatenate([mids, [np.inf]])
    lo_u, hi_u = np.clip(lo_u, a, b), np.clip(hi_u, a, b)
    left = np.zeros(n)
    right = np.zeros(n)
    pos = np.cumsum(owner) - 1
    left_sorted = np.where(owner, lo_u[pos], 0.0)
    right_sorted = np.where(owner, hi_u[pos], 0.0)
    left[order] = left_sorted
    right[order] = right_sorted
    return left, right


def voronoi_volumes_exact_1d(X: PointSet, omega) -> np.ndarray:
    left, right = voronoi_intervals_1d(X, omega)
    return np.maximum(right - left, 0.0)


def voronoi_volume_exact_1d(i: int, X: PointSet, omega) -> float:
    """Exact length of the 1-d cell of X_i, clipped to the interval Ω."""
    return float(voronoi_volumes_exact_1d(X, omega)[i])


# ----------------------------------------------------------------------
# cone stabilisation certificate
# ----------------------------------------------------------------------

CONE_COUNT_2D = 12
CONE_HALF_ANGLE = math.pi / 12
WIDE_HALF_ANGLE = math.pi / 6


@dataclass(frozen=True)
class StabCertificate:
    """``radius`` = 2 * max over cones of ``per_cone_distances``."""

    radius: float
    cone_count: int
    per_cone_distances: np.ndarray
    center: np.ndarray


def _clip_halfplane(poly: np.ndarray, normal: np.ndarray, origin: np.ndarray) -> np.ndarray:
    # keep points p with normal . (p - origin) >= 0 (Sutherland-Hodgman, one edge)
    if len(poly) == 0:
        return poly
    s = (poly - origin) @ normal
    out = []
    for j in range(len(poly)):
        p, q = poly[j], poly[(j + 1) % len(poly)]
        sp, sq = s[j], s[(j + 1) % len(poly)]
        if sp >= 0:
            out.append(p)
        if (sp >= 0) != (sq >= 0):
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return np.array(out).reshape(-1, 2)


def _sector_box_diameter(x: np.ndarray, theta: float, lower: np.ndarray, upper: np.ndarray) -> float:
    poly = np.array([[lower[0], lower[1]], [upper[0], lower[1]],
                     [upper[0], upper[1]], [lower[0], upper[1]]])
    a1, a2 = theta - CONE_HALF_ANGLE, theta + CONE_HALF_ANGLE
    # inward normals of the two bounding rays
    poly = _clip_halfplane(poly, np.array([-math.sin(a1), math.cos(a1)]), x)
    poly = _clip_halfplane(poly, np.array([math.sin(a2), -math.cos(a2)]), x)
    if len(poly) < 2:
        return 0.0
    diff = poly[:, None, :] - poly[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def stabilization_radius_cone(x, X: PointSet, omega: RegionSpec,
                              exclude: Optional[int] = None) -> StabCertificate:
    """Radius beyond which no change to X can alter V(x; X) ∩ Ω.

    In each cone C_i(x) the cell lies within distance R_i of x, where R_i
    is the distance to the nearest point of X in the widened cone C_i+(x),
    capped by diam(C_i(x) ∩ bbox(Ω)). The certificate radius is 2 max R_i.
    Supported for d = 1 (two half-lines) and d = 2 (twelve sectors).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    if d != X.d or d != omega.dim:
        raise ValueError("dimension mismatch")
    if np.any(x < omega.lower) or np.any(x > omega.upper):
        raise ValueError("certificate centre must lie in the bounding box of Ω")
    rel = X.locations - x
    dist = np.sqrt((rel ** 2).sum(axis=1))
    keep = dist > 0
    if exclude is not None:
        keep &= np.arange(X.n) != exclude
    rel, dist = rel[keep], dist[keep]

    if d == 1:
        caps = np.array([omega.upper[0] - x[0], x[0] - omega.lower[0]])
        masks = [rel[:, 0] > 0, rel[:, 0] < 0]
    elif d == 2:
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        thetas = (np.arange(CONE_COUNT_2D) + 0.5) * (2 * math.pi / CONE_COUNT_2D)
        caps = np.array([_sector_box_diameter(x, t, omega.lower, omega.upper) for t in thetas])
        gap = np.abs((phi[None, :] - thetas[:, None] + math.pi) % (2 * math.pi) - math.pi)
        masks = list(gap < WIDE_HALF_ANGLE)
    else:
        raise ValueError(f"cone certificate not available in dimension {d}")

    per_cone = np.array([min(dist[mk].min(initial=math.inf), cap) for mk, cap in zip(masks, caps)])
    return StabCertificate(2.0 * float(per_cone.max()), len(per_cone), per_cone, x)
