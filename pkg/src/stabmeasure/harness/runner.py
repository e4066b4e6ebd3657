"""Seeded replication runner.

Replication r at grid position g uses stream id ``g * reps + r`` under the
configured root seed, so the per-replication statistics do not depend on
execution order or thread count. Aggregation sorts by replication index
before summarising.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..estimators import (
    ank_components,
    ank_limit,
    gamma_limit_scaled,
    gamma_statistics,
    displacement_moment_exact,
    poisson_knn_from_origin,
    sym_diff_volume,
    two_point_sigma2,
)
from ..geometry import KnnIndex, voronoi_volumes_mc
from ..point_process import PointSet, metric_D, rescale, sample_binomial
from ..random_measure import Functional, TestFunction, add_one_costs, moment_of_new_point
from ..regions import RegionSpec, unit_ball_volume
from ..rng import RngStream
from .config import ExperimentConfig
from .report import ConvergenceReport, ReportRow

Stats = Dict[Tuple[int, str], float]
Targets = Dict[Tuple[int, str], Optional[float]]

_QUAD_SAMPLES = 400_000


def _interior(d: int) -> RegionSpec:
    return RegionSpec.box(np.full(d, 0.2), np.full(d, 0.8))


def _voronoi_coverage(cfg: ExperimentConfig, n: int, stream: RngStream) -> Stats:
    X = sample_binomial(n, cfg.density_spec(), stream.substream(0))
    res = sym_diff_volume(cfg.region_spec(), X, cfg.mc_samples, stream.substream(1))
    return {(0, "sym_diff"): res.sym_diff, (0, "an_volume"): res.an_volume}


def _voronoi_coverage_targets(cfg, n) -> Targets:
    return {(0, "sym_diff"): 0.0, (0, "an_volume"): cfg.region_spec().exact_volume}


def _cell_volume(cfg, n, stream) -> Stats:
    X = sample_binomial(n, cfg.density_spec(), stream.substream(0))
    vols = voronoi_volumes_mc(X, cfg.omega, cfg.mc_samples, stream.substream(1))
    inner = _interior(cfg.d).contains(X.locations)
    out = {(0, "mean_n_cell_volume"): float(np.mean(n * vols))}
    out[(0, "interior_n_cell_volume")] = float(np.mean(n * vols[inner])) if inner.any() else math.nan
    return out


def _cell_volume_targets(cfg, n) -> Targets:
    inner = _interior(cfg.d)
    dens = cfg.density_spec()
    mass = dens.mass(inner, _QUAD_SAMPLES, RngStream(cfg.seed, 0, (0xC0DE,)))
    return {(0, "mean_n_cell_volume"): cfg.omega.volume,
            (0, "interior_n_cell_volume"): inner.volume / mass}


def _gamma_ank(cfg, n, stream) -> Stats:
    X = sample_binomial(n, cfg.density_spec(), stream.substream(0))
    index = KnnIndex(X)
    model = cfg.model()
    out = {}
    for k in cfg.k:
        num, den = ank_components(X, model, k, index)
        out[(k, "ank")] = num / (2.0 * den)
    return out


def _gamma_ank_targets(cfg, n) -> Targets:
    lim = ank_limit(cfg.model(), cfg.density_spec(), _QUAD_SAMPLES, RngStream(cfg.seed, 0, (0xC0DE,)))
    return {(k, "ank"): lim for k in cfg.k}


def _gamma_two_point(cfg, n, stream) -> Stats:
    data = cfg.model().sample(cfg.density_spec(), n, stream.substream(0))
    gam = gamma_statistics(data, cfg.k)
    out = {(k, "n2d_gamma"): n ** (2.0 / cfg.d) * gam[k].gamma for k in cfg.k}
    out[(0, "sigma2_two_point")] = two_point_sigma2(gam[1].gamma, gam[2].gamma, cfg.d, n)
    return out


def _gamma_two_point_targets(cfg, n) -> Targets:
    model, dens = cfg.model(), cfg.density_spec()
    out: Targets = {}
    if model.scaled:
        for k in cfg.k:
            out[(k, "n2d_gamma")] = gamma_limit_scaled(model, dens, k, _QUAD_SAMPLES,
                                                       RngStream(cfg.seed, 0, (0xC0DE,)))
    else:
        for k in cfg.k:
            out[(k, "n2d_gamma")] = None
    out[(0, "sigma2_two_point")] = model.sigma ** 2 if model.scaled else None
    return out


def _displacement(cfg, n, stream) -> Stats:
    # grid values play the role of the intensity
    b = np.asarray(cfg.h_params, dtype=float)
    out = {}
    for k in cfg.k:
        N = poisson_knn_from_origin(float(n), k, cfg.d, 1, stream.substream(k))
        out[(k, "b_dot_N_sq")] = float((N[0] @ b) ** 2)
    return out


def _displacement_targets(cfg, n) -> Targets:
    return {(k, "b_dot_N_sq"): displacement_moment_exact(cfg.h_params, float(n), k) for k in cfg.k}


def _add_one(cfg, n, stream) -> Stats:
    X = sample_binomial(n, cfg.density_spec(), stream.substream(0))
    lam = cfg.lam(n)
    f = TestFunction.indicator(cfg.region_spec())
    costs = add_one_costs(f, Functional.voronoi(), X, lam, cfg.omega, cfg.mc_samples, stream.substream(1))
    m3 = moment_of_new_point(Functional.voronoi(), X, lam, cfg.omega, 3, cfg.mc_samples, stream.substream(2))
    return {(0, "delta_tilde"): costs.delta_tilde,
            (0, "abs_delta"): abs(costs.delta),
            (0, "abs_delta_prime"): abs(costs.delta_prime),
            (0, "new_point_moment3"): m3}


def _add_one_targets(cfg, n) -> Targets:
    # E|V(X_n; X_n)| = |Ω| / n by exchangeability
    return {(0, "delta_tilde"): 2.0 * cfg.lam(n) * cfg.omega.volume / n,
            (0, "abs_delta"): None, (0, "abs_delta_prime"): None, (0, "new_point_moment3"): None}


def _metric_d(cfg, n, stream) -> Stats:
    extra = int(math.ceil(math.sqrt(n)))
    X = sample_binomial(n + extra, cfg.density_spec(), stream.substream(0))
    center = np.full(cfg.d, 0.5)
    big = rescale(X, center, n).locations - center
    small = big[:n]
    D = metric_D(PointSet(small), PointSet(big), cfg.k_max)
    out = {(0, "agree_radius"): float(D.agree_radius)}
    r = np.sqrt((small ** 2).sum(axis=1))
    for K in cfg.k:
        out[(K, "count_in_ball")] = float(np.sum(r <= K))
    return out


def _metric_d_targets(cfg, n) -> Targets:
    kappa_c = float(cfg.density_spec().pdf(np.full((1, cfg.d), 0.5))[0])
    out: Targets = {(0, "agree_radius"): None}
    for K in cfg.k:
        out[(K, "count_in_ball")] = kappa_c * unit_ball_volume(cfg.d) * K ** cfg.d
    return out


EXPERIMENTS: Dict[str, Tuple[Callable, Callable]] = {
    "voronoi-coverage": (_voronoi_coverage, _voronoi_coverage_targets),
    "cell-volume": (_cell_volume, _cell_volume_targets),
    "gamma-ank": (_gamma_ank, _gamma_ank_targets),
    "gamma-two-point": (_gamma_two_point, _gamma_two_point_targets),
    "lemma52": (_displacement, _displacement_targets),
    "displacement-moment": (_displacement, _displacement_targets),
    "add-one-diagnostic": (_add_one, _add_one_targets),
    "metric-d-convergence": (_metric_d, _metric_d_targets),
}


def replicate(cfg: ExperimentConfig, grid_pos: int, rep: int) -> Stats:
    """Statistics of one replication; a pure function of (config, position, rep)."""
    fn, _ = EXPERIMENTS[cfg.experiment]
    stream = RngStream(cfg.seed, grid_pos * cfg.reps + rep)
    return fn(cfg, cfg.n_grid[grid_pos], stream)


def run(cfg: ExperimentConfig, threads: Optional[int] = None, order=None) -> ConvergenceReport:
    """Run every replication for every grid point and aggregate.

    ``order`` optionally permutes the task list (used to check that the
    result does not depend on execution order).
    """
    cfg.validate()
    threads = threads or cfg.threads
    tasks = [(g, r) for g in range(len(cfg.n_grid)) for r in range(cfg.reps)]
    if order is not None:
        tasks = [tasks[i] for i in order]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda t: replicate(cfg, *t), tasks))
    else:
        results = [replicate(cfg, *t) for t in tasks]
    by_task = dict(zip(tasks, results))

    _, target_fn = EXPERIMENTS[cfg.experiment]
    report = ConvergenceReport()
    for g, n in enumerate(cfg.n_grid):
        per_rep = [by_task[(g, r)] for r in range(cfg.reps)]
        targets = target_fn(cfg, n)
        for key in per_rep[0]:
            k, stat = key
            values = [s[key] for s in per_rep]
            report.add(ReportRow.from_values(cfg.experiment, cfg.d, n, k, stat, values,
                                             targets.get(key), cfg.seed))
    return report
