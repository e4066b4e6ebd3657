"""The Gamma test for the noise variance of a nonparametric regression.

Responses follow ``Y_i = h(X_i) + e_i`` or, in the scaled model,
``Y_i = h(X_i) + n^{-1/d} e_i``. The Gamma statistic for neighbour rank k
is half the mean squared response difference between each point and its
k-th nearest neighbour.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from ..geometry import KnnIndex
from ..point_process import DensitySpec, PointSet, sample_binomial
from ..regions import RegionSpec, unit_ball_volume
from ..rng import RngLike, RngStream, as_generator

log = logging.getLogger(__name__)

GUARD_FACTOR = 5.0
MISS_PROB = 1e-9


@dataclass(frozen=True)
class RegressionModel:
    """Regression function with analytic gradient plus noise level.

    Families
    --------
    ``linear``      h(x) = b·x, ``params`` = b
    ``quadratic``   h(x) = Σ a_j x_j², ``params`` = a
    ``sinusoidal``  h(x) = sin(w·x), ``params`` = w
    ``constant``    h(x) = c, ``params`` = [c]
    """

    family: str
    params: Tuple[float, ...]
    sigma: float = 0.0
    scaled: bool = False
    noise: str = "gaussian"

    def __post_init__(self):
        if self.family not in ("linear", "quadratic", "sinusoidal", "constant"):
            raise ValueError(f"unknown regression family {self.family!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        object.__setattr__(self, "params", tuple(float(p) for p in np.atleast_1d(self.params)))

    @classmethod
    def linear(cls, b, sigma: float = 0.0, scaled: bool = False) -> "RegressionModel":
        return cls("linear", tuple(np.atleast_1d(b)), sigma, scaled)

    @property
    def _p(self) -> np.ndarray:
        return np.asarray(self.params)

    def h(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.family == "linear":
            return x @ self._p
        if self.family == "quadratic":
            return (x ** 2) @ self._p
        if self.family == "sinusoidal":
            return np.sin(x @ self._p)
        return np.full(len(x), self._p[0])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.family == "linear":
            return np.broadcast_to(self._p, x.shape).copy()
        if self.family == "quadratic":
            return 2.0 * x * self._p
        if self.family == "sinusoidal":
            return np.cos(x @ self._p)[:, None] * self._p
        return np.zeros_like(x)

    def sample(self, density: DensitySpec, n: int, rng: RngLike) -> PointSet:
        """Draw (X_i, Y_i), i <= n; responses are stored as marks."""
        gen = as_generator(rng)
        X = sample_binomial(n, density, gen)
        if self.noise == "gaussian":
            e = self.sigma * gen.standard_normal(n)
        else:
            e = self.sigma * math.sqrt(3.0) * gen.uniform(-1.0, 1.0, n)
        if self.scaled:
            e = e * n ** (-1.0 / X.d)
        return X.with_marks(self.h(X.locations) + e)


class GammaStat(NamedTuple):
    gamma: float
    delta: float


def _neighbours(X: PointSet, k: int, index: Optional[KnnIndex] = None) -> np.ndarray:
    if X.n <= k:
        raise ValueError(f"Gamma statistic needs n > k (n={X.n}, k={k})")
    index = index or KnnIndex(X)
    nb, _ = index.query(X.locations, k, exclude=np.arange(X.n))
    return nb


def gamma_statistic(data: PointSet, k: int, index: Optional[KnnIndex] = None) -> GammaStat:
    """γ_{n,k} = (2n)⁻¹ Σ (Y_j − Y_i)² and δ_{n,k} = n⁻¹ Σ |X_j − X_i|².

    ``data`` carries the responses as marks; j = j(i, n, k) is the k-th
    nearest neighbour of X_i among the other points.
    """
    return gamma_statistics(data, [k], index)[k]


def gamma_statistics(data: PointSet, ks: Sequence[int],
                     index: Optional[KnnIndex] = None) -> Dict[int, GammaStat]:
    """γ and δ for several k from a single neighbour query."""
    if not data.is_marked:
        raise ValueError("data must carry responses as marks")
    kmax = max(ks)
    nb = _neighbours(data, kmax, index)
    loc, y = data.locations, data.marks
    out = {}
    for k in ks:
        j = nb[:, k - 1]
        gam = 0.5 * float(np.mean((y[j] - y) ** 2))
        dlt = float(np.mean(np.sum((loc[j] - loc) ** 2, axis=1)))
        out[k] = GammaStat(gam, dlt)
    return out


def ank_components(X: PointSet, model: RegressionModel, k: int,
                   index: Optional[KnnIndex] = None) -> Tuple[float, float]:
    """Sample means of (∇h(X_i)·(X_j − X_i))² and |X_j − X_i|² over i."""
    nb = _neighbours(X, k, index)[:, k - 1]
    disp = X.locations[nb] - X.locations
    num = np.einsum("ij,ij->i", model.gradient(X.locations), disp) ** 2
    return float(num.mean()), float((disp ** 2).sum(axis=1).mean())


def ank_empirical(model: RegressionModel, density: DensitySpec, n: int, k: int, reps: int,
                  rng: RngLike) -> float:
    """Monte Carlo A_{n,k}: ratio of mean numerator to twice the mean denominator.

    Means are taken over all points and replications; replication r uses
    sub-stream r of ``rng`` when ``rng`` is an :class:`RngStream`.
    """
    nums, dens = [], []
    shared = None if isinstance(rng, RngStream) else as_generator(rng)
    for r in range(reps):
        gen = shared if shared is not None else rng.substream(r).generator()
        X = sample_binomial(n, density, gen)
        a, b = ank_components(X, model, k)
        nums.append(a)
        dens.append(b)
    return float(np.mean(nums) / (2.0 * np.mean(dens)))


def _quadrature(density: DensitySpec, m: int, rng: RngLike):
    z = density.support.sample_uniform(m, rng)
    return z, density.pdf(z), density.support.volume


def ank_limit(model: RegressionModel, density: DensitySpec, m: int = 200_000,
              rng: RngLike = 0) -> float:
    """Limit of A_{n,k}: ∫κ^{(d−2)/d}|∇h|² / (2d ∫κ^{(d−2)/d}) by MC quadrature."""
    z, kap, vol = _quadrature(density, m, rng)
    d = density.dim
    w = kap ** ((d - 2.0) / d)
    g2 = np.sum(model.gradient(z) ** 2, axis=1)
    return float(np.mean(w * g2) / (2 * d * np.mean(w)))


def rho_k_sq_mean(k: int, d: int) -> float:
    """E[ρ_k²] = ω_d^{−2/d} Γ(k + 2/d) / Γ(k) for a unit-intensity Poisson process."""
    if k < 1 or d < 1:
        raise ValueError("k and d must be positive")
    return math.exp(gammaln(k + 2.0 / d) - gammaln(k)) * unit_ball_volume(d) ** (-2.0 / d)


def gamma_limit_scaled(model: RegressionModel, density: DensitySpec, k: int,
                       m: int = 200_000, rng: RngLike = 0) -> float:
    """Limit of n^{2/d} γ_{n,k} under the scaled model:
    σ² + E[ρ_k²]/(2d) ∫ |∇h|² κ^{1−2/d} dx."""
    d = density.dim
    z, kap, vol = _quadrature(density, m, rng)
    g2 = np.sum(model.gradient(z) ** 2, axis=1)
    integral = vol * float(np.mean(g2 * kap ** (1.0 - 2.0 / d)))
    return model.sigma ** 2 + rho_k_sq_mean(k, d) / (2 * d) * integral


def two_point_sigma2(gamma1: float, gamma2: float, d: int, n: int) -> float:
    """Intercept of the line through (E ρ_k², n^{2/d} γ_{n,k}) for k = 1, 2."""
    r1, r2 = rho_k_sq_mean(1, d), rho_k_sq_mean(2, d)
    return n ** (2.0 / d) * (gamma2 * r1 - gamma1 * r2) / (r1 - r2)


# ----------------------------------------------------------------------
# k-th neighbour of the origin in a homogeneous Poisson process
# ----------------------------------------------------------------------

def guard_half_width(intensity: float, k: int, d: int, guard: float = GUARD_FACTOR,
                     miss_prob: float = MISS_PROB) -> float:
    """Half-width of the simulation cube around the origin.

    At least ``guard * (k / (intensity * ω_d))^{1/d}``, and large enough
    that the inscribed ball holds fewer than k points with probability
    below ``miss_prob``.
    """
    w = unit_ball_volume(d)
    mu = guard ** d * k
    while poisson.cdf(k - 1, mu) > miss_prob:
        mu *= 1.25
    return (mu / (intensity * w)) ** (1.0 / d)


def poisson_knn_from_origin(intensity: float, k: int, d: int, reps: int, rng: RngLike,
                            guard: float = GUARD_FACTOR) -> np.ndarray:
    """Location of the k-th nearest point to 0 in ``reps`` independent processes.

    Each process lives on a cube of half-width :func:`guard_half_width`;
    rows with fewer than k points
    return the origin. Replications where the k-th neighbour lies outside
    the inscribed ball (so a nearer point may have been cut off) are logged.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    gen = as_generator(rng)
    half = guard_half_width(intensity, k, d, guard)
    counts = gen.poisson(intensity * (2 * half) ** d, size=reps)
    total = int(counts.sum())
    pts = gen.uniform(-half, half, size=(total, d))
    rep = np.repeat(np.arange(reps), counts)
    r2 = np.einsum("ij,ij->i", pts, pts)
    order = np.lexsort((r2, rep))
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    out = np.zeros((reps, d))
    ok = counts >= k
    out[ok] = pts[order[starts[ok] + k - 1]]
    escaped = int(np.sum(np.einsum("ij,ij->i", out, out)[ok] > half * half)) + int(np.sum(~ok))
    if escaped:
        log.warning("%d of %d replications had the %d-th neighbour beyond the guard radius",
                    escaped, reps, k)
    return out


class DisplacementMoment(NamedTuple):
    empirical: float
    exact: float
    stderr: float


def displacement_moment_exact(b, intensity: float, k: int) -> float:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = b.size
    return float(b @ b) * intensity ** (-2.0 / d) * rho_k_sq_mean(k, d) / d


def displacement_moment_check(b, intensity: float, k: int, reps: int, rng: RngLike) -> DisplacementMoment:
    """MC estimate of E|b·N^k(0)|² in a Poisson process of the given intensity,
    with the closed form d⁻¹λ^{−2/d}|b|²E[ρ_k²]."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    exact = displacement_moment_exact(b, intensity, k)
    if not np.any(b):
        return DisplacementMoment(0.0, exact, 0.0)
    N = poisson_knn_from_origin(intensity, k, b.size, reps, rng)
    vals = (N @ b) ** 2
    return DisplacementMoment(float(vals.mean()), exact, float(vals.std(ddof=1) / math.sqrt(reps)))


def check_gradient(model: RegressionModel, region: RegionSpec, m: int = 1000, rng: RngLike = 0,
                   eps: float = 1e-6) -> float:
    """Largest relative gap between the analytic gradient and central differences."""
    z = region.sample_uniform(m, rng)
    g = model.gradient(z)
    fd = np.empty_like(z)
    for j in range(z.shape[1]):
        e = np.zeros(z.shape[1])
        e[j] = eps
        fd[:, j] = (model.h(z + e) - model.h(z - e)) / (2 * eps)
    scale = np.maximum(np.abs(g), 1.0)
    return float(np.max(np.abs(fd - g) / scale))


__all__ = [
    "RegressionModel", "GammaStat", "gamma_statistic", "gamma_statistics", "ank_components",
    "ank_empirical", "ank_limit", "rho_k_sq_mean", "gamma_limit_scaled", "two_point_sigma2",
    "poisson_knn_from_origin", "DisplacementMoment", "displacement_moment_exact", "displacement_moment_check", "check_gradient",
]
