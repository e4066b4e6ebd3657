"""Stabilizing random measures with Voronoi and nearest-neighbour applications."""
from .geometry import (
    SELF,
    KnnIndex,
    StabCertificate,
    knn,
    knn_bruteforce,
    nearest_nucleus,
    stabilization_radius_cone,
    voronoi_volume_exact_1d,
    voronoi_volume_mc,
    voronoi_volumes_exact_1d,
    voronoi_volumes_mc,
)
from .point_process import (
    DensityError,
    DensitySpec,
    MarkedPoint,
    MetricD,
    PointSet,
    attach_marks,
    metric_D,
    rescale,
    sample_binomial,
    sample_poisson_homogeneous,
)
from .random_measure import (
    AddOneCosts,
    CellRestriction,
    Functional,
    PointMass,
    TestFunction,
    add_one_costs,
    integrate,
    nu_total,
    xi_lambda,
    xi_star,
)
from .regions import RegionSpec, unit_ball_volume
from .rng import RngStream

__version__ = "0.1.0"
