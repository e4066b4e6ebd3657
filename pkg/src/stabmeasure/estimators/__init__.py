"""Voronoi set estimation and the Gamma test."""
from .dataio import DataFormatError, read_regression_data, write_regression_data
from .gamma_test import (
    GammaStat,
    DisplacementMoment,
    RegressionModel,
    ank_components,
    ank_empirical,
    ank_limit,
    check_gradient,
    gamma_limit_scaled,
    gamma_statistic,
    gamma_statistics,
    displacement_moment_check,
    displacement_moment_exact,
    poisson_knn_from_origin,
    rho_k_sq_mean,
    two_point_sigma2,
)
from .voronoi_set import SymDiff, sym_diff_via_cells, sym_diff_volume, voronoi_estimate_membership
