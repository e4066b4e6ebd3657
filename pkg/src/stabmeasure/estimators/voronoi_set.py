"""Voronoi estimation of a set A ⊆ Ω = (0,1)^d from sensor locations.

The estimate A_n is the union of the Voronoi cells whose nuclei fall in A;
membership of a point z is decided by the nucleus nearest to z.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from ..geometry import KnnIndex, cell_labels
from ..point_process import PointSet
from ..regions import RegionSpec
from ..rng import RngLike


def voronoi_estimate_membership(z, A: RegionSpec, index: KnnIndex):
    """True iff the nucleus nearest to ``z`` lies in A (z ∈ A_n up to ties).

    Accepts one point ``(d,)`` or a batch ``(m, d)``.
    """
    if index.n == 0:
        raise ValueError("need at least one nucleus")
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    labels = cell_labels(index, np.atleast_2d(z))
    member = A.contains(index.locations[labels])
    return bool(member[0]) if single else member


class SymDiff(NamedTuple):
    sym_diff: float
    an_volume: float
    sym_diff_se: float


def sym_diff_volume(A: RegionSpec, X: PointSet, m: int, rng: RngLike,
                    omega: Optional[RegionSpec] = None,
                    index: Optional[KnnIndex] = None) -> SymDiff:
    """MC estimates of |A Δ A_n| and |A_n| from ``m`` uniform points on Ω."""
    omega = omega or RegionSpec.unit_cube(X.d)
    z = omega.sample_uniform(m, rng)
    in_a = A.contains(z)
    in_an = voronoi_estimate_membership(z, A, index or KnnIndex(X))
    wrong = (in_a != in_an).astype(float)
    vol = omega.volume
    return SymDiff(vol * float(wrong.mean()), vol * float(in_an.mean()),
                   vol * float(wrong.std() / math.sqrt(m)))


def sym_diff_via_cells(A: RegionSpec, X: PointSet, m: int, rng: RngLike,
                       omega: Optional[RegionSpec] = None) -> SymDiff:
    """|A Δ A_n| as Σ_{x∉A} |V(x) ∩ A| + Σ_{x∈A} |V(x) \\ A|.

    Each cell's two pieces are estimated from a batch of uniform points;
    the per-cell terms are then summed.
    """
    omega = omega or RegionSpec.unit_cube(X.d)
    z = omega.sample_uniform(m, rng)
    labels = cell_labels(X, z)
    in_a = A.contains(z)
    unit = omega.volume / m
    v_in_a = np.bincount(labels, weights=in_a.astype(float), minlength=X.n) * unit
    v_all = np.bincount(labels, minlength=X.n) * unit
    nucleus_in_a = A.contains(X.locations)
    terms = np.where(nucleus_in_a, v_all - v_in_a, v_in_a)
    # per-sample indicator for the standard error
    per_sample = np.where(nucleus_in_a[labels], ~in_a, in_a).astype(float)
    return SymDiff(float(terms.sum()), float(v_all[nucleus_in_a].sum()),
                   omega.volume * float(per_sample.std() / math.sqrt(m)))
