"""Independent reference computations behind the hand-checked test values.

Each oracle returns a list of ``(label, value)`` pairs; the CLI prints them
so the provenance of every frozen test constant can be regenerated.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import integrate

from ..estimators import displacement_moment_exact, rho_k_sq_mean
from ..geometry import knn_bruteforce
from ..point_process import PointSet, metric_D
from ..regions import unit_ball_volume

Pairs = List[Tuple[str, float]]


def rho_k_sq() -> Pairs:
    """E[ρ_k²] by direct numerical integration of the k-th neighbour law.

    P[ρ_k > r] = P[Poisson(ω_d r^d) < k], so E[ρ_k²] = ∫ 2r P[ρ_k > r] dr.
    Independent of the Gamma-function closed form.
    """
    out = []
    for d in (1, 2, 3):
        w = unit_ball_volume(d)
        for k in (1, 2, 3):
            def surv(r, d=d, k=k, w=w):
                mu = w * r ** d
                return math.exp(-mu) * sum(mu ** j / math.factorial(j) for j in range(k))
            val, _ = integrate.quad(lambda r: 2 * r * surv(r), 0, math.inf, limit=200)
            out.append((f"d={d} k={k} quadrature", val))
            out.append((f"d={d} k={k} closed_form", rho_k_sq_mean(k, d)))
    return out


def voronoi_1d() -> Pairs:
    """Cell lengths on (0,1) from explicit midpoints, no shared code path."""
    out = []
    for nuclei in ([0.25, 0.75], [0.1, 0.2, 0.9], [0.5]):
        xs = sorted(nuclei)
        edges = [0.0] + [(a + b) / 2 for a, b in zip(xs, xs[1:])] + [1.0]
        for x, lo, hi in zip(xs, edges, edges[1:]):
            out.append((f"nuclei={nuclei} cell({x})", hi - lo))
    return out


def add_one_1d() -> Pairs:
    """n=2 on (0,1): X_1=0.2 then X_2=0.6; λ = n = 2.

    Old cell of X_1 is (0,1); new cells (0,0.4) and (0.4,1). The cell of X_1
    loses (0.4,1), so Δ̃ = 2·0.6 + 2·0.6 = 2.4 = 2n|V(X_2)|.
    """
    lam = 2.0
    new_cell = 1.0 - 0.4
    lost = 1.0 - 0.4
    return [("delta_tilde", lam * new_cell + lam * lost), ("2n|V(X_n;X_n)|", 2 * 2 * new_cell)]


def displacement_moment() -> Pairs:
    out = []
    for lam in (1.0, 4.0):
        out.append((f"d=2 lambda={lam} k=1 b=(1,0)", displacement_moment_exact([1.0, 0.0], lam, 1)))
    out.append(("d=2 scaling factor 4^(-2/d)", 4.0 ** (-1.0)))
    return out


def ank_linear() -> Pairs:
    """|b|²/(2d) for linear h and constant density (integrals cancel)."""
    return [(f"d={d} |b|^2=1", 1.0 / (2 * d)) for d in (1, 2, 3)]


def gamma_limit() -> Pairs:
    """σ² + E[ρ_k²]/(2d)|b|² for uniform density on the unit cube."""
    out = []
    for k in (1, 2):
        out.append((f"d=2 sigma2=1 |b|^2=1 k={k}", 1.0 + rho_k_sq_mean(k, 2) / 4.0))
    return out


def metric_d_cases() -> Pairs:
    X = PointSet(np.array([[0.5, 0.0], [2.0, 1.0], [3.5, 0.0]]))
    Y = PointSet(np.array([[0.5, 0.0], [2.0, 1.0]]))
    return [
        ("X=Y K_max=10", metric_D(Y, Y, 10).value),
        ("{0.5} vs empty d=1", metric_D(PointSet.from_points([0.5]), PointSet.empty(1), 10).value),
        ("differ at radius 3.5 K_max=10", metric_D(X, Y, 10).value),
    ]


def knn_grid_ties() -> Pairs:
    """Brute-force neighbours of (1,1) on the 3x3 integer grid, k=5."""
    grid = np.array([[a, b] for a in range(3) for b in range(3)], dtype=float)
    nb = knn_bruteforce(grid, np.array([1.0, 1.0]), 5, exclude=4)
    return [(f"rank {r + 1}", float(j)) for r, j in enumerate(nb)]


ORACLES: Dict[str, Callable[[], Pairs]] = {
    "rho-k-sq": rho_k_sq,
    "voronoi-1d": voronoi_1d,
    "add-one-1d": add_one_1d,
    "displacement-moment": displacement_moment,
    "ank-linear": ank_linear,
    "gamma-limit": gamma_limit,
    "metric-d": metric_d_cases,
    "knn-grid-ties": knn_grid_ties,
}
