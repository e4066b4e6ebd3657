"""Rescaled measures ξ_λ, point-mass surrogates ξ*_λ, ⟨f, ν_{λ,n}⟩ and add-one costs.

Two measure shapes are supported:

* point masses at the nucleus (the k-NN quadratic functionals of the Gamma
  test, marked or unmarked), and
* λ times Lebesgue measure on the Voronoi cell of the nucleus.

Both built-in functionals are translation invariant, so ξ_λ is computed
directly from the unscaled configuration (Voronoi cells pick up a factor λ
by homogeneity; neighbour displacements a factor λ^{1/d}). The literal
dilation route is kept in :func:`xi_lambda_dilated` so the two can be
compared.

Monte Carlo integrals against cell measures draw one batch of uniform points
on Ω and label each with its nearest nucleus; sums over cells built from the
same batch are therefore exact partitions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .geometry import SELF, KnnIndex, cell_labels, stabilization_radius_cone, voronoi_intervals_1d
from .point_process import MarkedPoint, PointSet, rescale
from .regions import RegionSpec
from .rng import RngLike, as_generator

VORONOI = "voronoi-volume"
KNN_QUADRATIC = "knn-quadratic"
KNN_QUADRATIC_MARKED = "knn-quadratic-marked"


@dataclass(frozen=True)
class Functional:
    """Which ξ to evaluate.

    ``gradient`` maps an ``(m, d)`` array to the ``(m, d)`` gradient of h
    (k-NN kinds only).
    """

    kind: str
    k: int = 1
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    density_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (VORONOI, KNN_QUADRATIC, KNN_QUADRATIC_MARKED):
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind != VORONOI and self.gradient is None:
            raise ValueError("k-NN functionals need a gradient oracle")
        if self.kind == VORONOI and self.density_bound is None:
            object.__setattr__(self, "density_bound", 1.0)

    @classmethod
    def voronoi(cls) -> "Functional":
        return cls(VORONOI)

    @classmethod
    def knn_quadratic(cls, gradient, k: int = 1, marked: bool = False) -> "Functional":
        return cls(KNN_QUADRATIC_MARKED if marked else KNN_QUADRATIC, k, gradient)

    @property
    def assumption_class(self) -> str:
        return "A2" if self.kind == VORONOI else "A1"


@dataclass(frozen=True)
class PointMass:
    location: np.ndarray
    weight: float


@dataclass(frozen=True)
class CellRestriction:
    """``scale`` times Lebesgue measure on V(X_i; X) ∩ Ω."""

    nucleus: int
    points: PointSet
    omega: RegionSpec
    scale: float

    @property
    def location(self) -> np.ndarray:
        return self.points.locations[self.nucleus]


MeasureValue = Union[PointMass, CellRestriction]


@dataclass(frozen=True)
class TestFunction:
    """Bounded f on Ω, extended by zero off ``domain`` (when given)."""

    oracle: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    continuity_class: str = "continuous"
    domain: Optional[RegionSpec] = None

    __test__ = False  # not a pytest class

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        vals = np.asarray(self.oracle(x), dtype=float).reshape(len(x))
        if self.domain is not None:
            vals = np.where(self.domain.contains(x), vals, 0.0)
        return vals

    @classmethod
    def constant(cls, c: float = 1.0, domain: Optional[RegionSpec] = None) -> "TestFunction":
        return cls(lambda x: np.full(len(x), c), abs(c), "continuous", domain)

    @classmethod
    def indicator(cls, region: RegionSpec) -> "TestFunction":
        return cls(lambda x: region.contains(x).astype(float), 1.0, "indicator")

    def combine(self, alpha: float, other: "TestFunction", beta: float) -> "TestFunction":
        return TestFunction(lambda x: alpha * self(x) + beta * other(x),
                            abs(alpha) * self.sup_bound + abs(beta) * other.sup_bound,
                            "ae-continuous")


def _index_of(x, X: PointSet):
    if isinstance(x, (int, np.integer)):
        return int(x), X
    if isinstance(x, MarkedPoint):
        return X.n, X.adjoin(x)
    raise TypeError("x must be a point index or a MarkedPoint to adjoin")


def _knn_weights(func: Functional, X: PointSet, lam: float, omega: RegionSpec,
                 rows: Optional[np.ndarray] = None, index: Optional[KnnIndex] = None) -> np.ndarray:
    rows = np.arange(X.n) if rows is None else np.asarray(rows)
    if len(rows) == 0:
        return np.zeros(0)
    index = index or KnnIndex(X)
    loc = X.locations[rows]
    nb, _ = index.query(loc, func.k, exclude=rows)
    j = nb[:, -1]
    has = j != SELF
    nbloc = np.where(has[:, None], X.locations[np.where(has, j, 0)], loc)
    disp = lam ** (1.0 / X.d) * np.einsum("ij,ij->i", func.gradient(loc), nbloc - loc)
    if func.kind == KNN_QUADRATIC_MARKED:
        if not X.is_marked:
            raise ValueError("marked functional needs a marked point set")
        mk = X.marks
        disp = disp + np.where(has, mk[np.where(has, j, 0)], mk[rows]) - mk[rows]
    return np.where(omega.contains(loc), disp ** 2, 0.0)


def xi_lambda(func: Functional, x, X: PointSet, lam: float, omega: RegionSpec) -> MeasureValue:
    """ξ_λ(x; X, ·) with Ω_λ = Ω.

    ``x`` is the index of a point of X, or a :class:`MarkedPoint` which is
    adjoined to X first.
    """
    i, X = _index_of(x, X)
    if func.kind == VORONOI:
        return CellRestriction(i, X, omega, float(lam))
    w = _knn_weights(func, X, lam, omega, rows=np.array([i]))[0]
    return PointMass(X.locations[i].copy(), float(w))


def xi_lambda_dilated(func: Functional, x, X: PointSet, lam: float, omega: RegionSpec,
                      m: int = 0, rng: RngLike = None) -> float:
    """Total mass ξ_λ(x; X, Ω) computed by literally dilating X and Ω about x.

    Exact for k-NN kinds and for Voronoi cells in d = 1; Monte Carlo with
    ``m`` samples for Voronoi cells in higher dimension.
    """
    i, X = _index_of(x, X)
    c = X.locations[i]
    if not omega.contains(c):
        return 0.0
    Xd = rescale(X, c, lam)
    if func.kind == VORONOI:
        om = omega.scaled(c, lam ** (1.0 / X.d))
        if X.d == 1:
            left, right = voronoi_intervals_1d(Xd, om)
            return float(max(right[i] - left[i], 0.0))
        z = om.sample_uniform(m, rng)
        return float(om.volume * np.mean(cell_labels(Xd, z) == i))
    return float(_knn_weights(func, Xd, 1.0, RegionSpec.box(Xd.locations[i] - 1, Xd.locations[i] + 1),
                              rows=np.array([i]))[0])


def _cell_total(mu: CellRestriction, m: int, rng: RngLike) -> float:
    if not mu.omega.contains(mu.location):
        return 0.0
    if mu.points.d == 1 and mu.omega.is_box:
        left, right = voronoi_intervals_1d(mu.points, mu.omega)
        return mu.scale * float(max(right[mu.nucleus] - left[mu.nucleus], 0.0))
    z = mu.omega.sample_uniform(m, rng)
    return mu.scale * mu.omega.volume * float(np.mean(cell_labels(mu.points, z) == mu.nucleus))


def xi_star(mu: MeasureValue, omega: Optional[RegionSpec] = None, m: int = 100_000,
            rng: RngLike = None) -> PointMass:
    """Point mass at the nucleus carrying the total mass ξ_λ(x; X, Ω)."""
    if isinstance(mu, PointMass):
        if omega is not None and not omega.contains(mu.location):
            return PointMass(mu.location, 0.0)
        return mu
    if omega is not None and omega is not mu.omega:
        mu = CellRestriction(mu.nucleus, mu.points, omega, mu.scale)
    return PointMass(mu.location.copy(), _cell_total(mu, m, rng))


def integrate(f: TestFunction, mu: MeasureValue, m: int = 100_000, rng: RngLike = None) -> float:
    """⟨f, μ⟩ for a point mass (exact) or a cell measure (unbiased MC)."""
    if isinstance(mu, PointMass):
        if mu.weight == 0:
            return 0.0
        return float(f(mu.location)[0] * mu.weight)
    if not mu.omega.contains(mu.location):
        return 0.0
    z = mu.omega.sample_uniform(m, rng)
    hit = cell_labels(mu.points, z) == mu.nucleus
    return mu.scale * mu.omega.volume * float(np.mean(f(z) * hit))


# ----------------------------------------------------------------------
# sums over the sample
# ----------------------------------------------------------------------

@dataclass
class CellBatch:
    """Uniform samples on Ω labelled by nearest nucleus, shared across cells."""

    z: np.ndarray
    f_values: np.ndarray
    unit: float  # |Ω| / m

    @classmethod
    def draw(cls, f: TestFunction, omega: RegionSpec, m: int, rng: RngLike) -> "CellBatch":
        z = omega.sample_uniform(m, rng)
        return cls(z, f(z), omega.volume / m)

    def per_cell(self, X: PointSet, omega: RegionSpec):
        """Per-nucleus (∫_V f, |V|) from this batch, nuclei outside Ω zeroed."""
        labels = cell_labels(X, self.z)
        inside = omega.contains(X.locations)
        f_int = np.bincount(labels, weights=self.f_values, minlength=X.n) * self.unit
        vol = np.bincount(labels, minlength=X.n) * self.unit
        return f_int * inside, vol * inside, labels


def point_weights(func: Functional, X: PointSet, lam: float, omega: RegionSpec,
                  m: int = 100_000, rng: RngLike = None) -> np.ndarray:
    """Total masses ξ_λ(X_i; X, Ω) for every i."""
    if func.kind != VORONOI:
        return _knn_weights(func, X, lam, omega)
    inside = omega.contains(X.locations)
    if X.d == 1 and omega.is_box:
        left, right = voronoi_intervals_1d(X, omega)
        return lam * np.maximum(right - left, 0.0) * inside
    z = omega.sample_uniform(m, rng)
    vol = np.bincount(cell_labels(X, z), minlength=X.n) * (omega.volume / m)
    return lam * vol * inside


def nu_total(f: TestFunction, func: Functional, X: PointSet, lam: float, omega: RegionSpec,
             m: int = 100_000, rng: RngLike = None) -> float:
    """⟨f, ν_{λ,n}⟩ = Σ_i ⟨f, ξ_λ(X_i; X_n)⟩ (one shared MC batch for cells)."""
    if X.n < 1:
        raise ValueError("need at least one point")
    if func.kind != VORONOI:
        return float(np.sum(f(X.locations) * _knn_weights(func, X, lam, omega)))
    f_int, _, _ = CellBatch.draw(f, omega, m, rng).per_cell(X, omega)
    return lam * float(f_int.sum())


def g_sum(f: TestFunction, func: Functional, X: PointSet, lam: float, omega: RegionSpec,
          m: int = 100_000, rng: RngLike = None) -> float:
    """Σ_i |⟨f, ξ_λ(X_i; X) − ξ*_λ(X_i; X)⟩|; identically 0 for point masses."""
    if func.kind != VORONOI:
        return 0.0
    batch = CellBatch.draw(f, omega, m, rng)
    f_int, vol, _ = batch.per_cell(X, omega)
    return lam * float(np.abs(f_int - f(X.locations) * vol).sum())


@dataclass(frozen=True)
class AddOneCosts:
    delta: float
    delta_prime: float
    delta_tilde: float
    detail: dict = field(default_factory=dict, compare=False)


def add_one_costs(f: TestFunction, func: Functional, X: PointSet, lam: float, omega: RegionSpec,
                  m: int = 100_000, rng: RngLike = None) -> AddOneCosts:
    """The three add-one costs for adjoining X_n to X_{n-1}.

    Returns Δ = ⟨f, ν_{λ,n} − ν_{λ,n−1}⟩, Δ′ = G_{λ,n}(f) − G_{λ,n−1}(f)
    and Δ̃ = ξ_λ(X_n; X_n, Ω) + Σ_{i<n} |ξ_λ(X_i; X_n) − ξ_λ(X_i; X_{n−1})|(Ω).

    Cell measures: exact interval arithmetic in d = 1, otherwise one
    shared MC batch for both configurations. Total variations are computed
    from both signed parts; ``detail`` records the positive parts, which
    vanish for Voronoi cells.
    """
    n = X.n
    if n < 2:
        raise ValueError("add-one costs need n >= 2")
    Xp = X.prefix(n - 1)
    if func.kind != VORONOI:
        w_new = _knn_weights(func, X, lam, omega)
        w_old = _knn_weights(func, Xp, lam, omega)
        fx = f(X.locations)
        delta = float(np.sum(fx * w_new) - np.sum(fx[:-1] * w_old))
        tv = np.abs(w_new[:-1] - w_old)
        return AddOneCosts(delta, 0.0, float(w_new[-1] + tv.sum()),
                           {"positive_part": float(np.maximum(w_new[:-1] - w_old, 0).sum()),
                            "new_point_mass": float(w_new[-1])})

    if X.d == 1 and omega.is_box:
        return _add_one_voronoi_1d(f, X, lam, omega, m, rng)

    batch = CellBatch.draw(f, omega, m, rng)
    f_new, vol_new, lab_new = batch.per_cell(X, omega)
    f_old, vol_old, lab_old = batch.per_cell(Xp, omega)
    fx = f(X.locations)
    delta = lam * float(f_new.sum() - f_old.sum())
    g_new = lam * np.abs(f_new - fx * vol_new).sum()
    g_old = lam * np.abs(f_old - fx[:-1] * vol_old).sum()
    inside = omega.contains(X.locations)
    # per-cell signed change, counted sample by sample
    ins_old = inside[:-1][lab_old]
    ins_new = inside[lab_new]
    lost = np.bincount(lab_old[(lab_old != lab_new) & ins_old], minlength=n - 1)
    gained = np.bincount(lab_new[(lab_old != lab_new) & (lab_new < n - 1) & ins_new], minlength=n - 1)
    tv = lam * batch.unit * (lost + gained)
    dtilde = lam * vol_new[-1] + float(tv.sum())
    return AddOneCosts(delta, float(g_new - g_old), float(dtilde),
                       {"positive_part": lam * batch.unit * float(gained.sum()),
                        "new_point_mass": lam * float(vol_new[-1])})


def _interval_overlap(l1, r1, l2, r2):
    return np.maximum(np.minimum(r1, r2) - np.maximum(l1, l2), 0.0)


def _add_one_voronoi_1d(f, X, lam, omega, m, rng):
    n = X.n
    Xp = X.prefix(n - 1)
    ln, rn = voronoi_intervals_1d(X, omega)
    lo, ro = voronoi_intervals_1d(Xp, omega)
    len_new = np.maximum(rn - ln, 0.0)
    len_old = np.maximum(ro - lo, 0.0)
    inside = omega.contains(X.locations)
    # |I Δ J| for each surviving cell
    sym = len_new[:-1] + len_old - 2 * _interval_overlap(ln[:-1], rn[:-1], lo, ro)
    tv = lam * sym * inside[:-1]
    dtilde = lam * len_new[-1] * inside[-1] + float(tv.sum())
    positive = lam * float((np.maximum(len_new[:-1] - _interval_overlap(ln[:-1], rn[:-1], lo, ro), 0)
                            * inside[:-1]).sum())
    # Δ and Δ' need ∫ f over cells; MC on a shared batch unless f is constant
    batch = CellBatch.draw(f, omega, m, rng)
    f_new, vol_new, _ = batch.per_cell(X, omega)
    f_old, vol_old, _ = batch.per_cell(Xp, omega)
    fx = f(X.locations)
    delta = lam * float(f_new.sum() - f_old.sum())
    g_new = lam * np.abs(f_new - fx * vol_new).sum()
    g_old = lam * np.abs(f_old - fx[:-1] * vol_old).sum()
    return AddOneCosts(delta, float(g_new - g_old), float(dtilde),
                       {"positive_part": positive, "new_point_mass": lam * float(len_new[-1] * inside[-1]),
                        "exact_cells": True})


def local_cell_volume(i: int, X: PointSet, omega: RegionSpec, m: int, rng: RngLike = None,
                      index: Optional[KnnIndex] = None) -> float:
    """MC estimate of |V(X_i; X) ∩ Ω| sampling only near X_i.

    The cone certificate bounds the cell by a ball of radius R/2, so the
    samples are drawn in the box of half-width R/2 clipped to the bounding
    box of Ω. Exact in d = 1; d = 2 only otherwise.
    """
    if X.d == 1 and omega.is_box:
        left, right = voronoi_intervals_1d(X, omega)
        return float(max(right[i] - left[i], 0.0))
    x = X.locations[i]
    if not omega.contains(x):
        return 0.0
    half = stabilization_radius_cone(x, X, omega, exclude=i).radius / 2
    lo = np.maximum(x - half, omega.lower)
    hi = np.minimum(x + half, omega.upper)
    z = as_generator(rng).uniform(lo, hi, (m, X.d))
    index = index or KnnIndex(X)
    hit = (cell_labels(index, z) == i) & omega.contains(z)
    return float(np.prod(hi - lo) * hit.mean())


def moment_of_new_point(func: Functional, X: PointSet, lam: float, omega: RegionSpec, p: float,
                        m: int = 100_000, rng: RngLike = None) -> float:
    """ξ_λ(X_n; X_{n−1} ∪ {X_n}, Ω)^p for the last point of X."""
    if func.kind == VORONOI:
        return float((lam * local_cell_volume(X.n - 1, X, omega, m, rng)) ** p)
    w = _knn_weights(func, X, lam, omega, rows=np.array([X.n - 1]))
    return float(w[0] ** p)
