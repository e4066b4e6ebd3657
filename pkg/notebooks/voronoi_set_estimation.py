"""
Estimating a set from labelled sample points
============================================

Drop n uniform points in the unit square and label each by whether it lies
in a disc A. The union of Voronoi cells of the points inside A estimates A.
The error volume |A Δ A_n| shrinks as n grows.
"""

import math

import numpy as np

from stabmeasure import DensitySpec, RegionSpec, RngStream, sample_binomial
from stabmeasure.estimators import sym_diff_volume

square = RegionSpec.unit_cube(2)
disc = RegionSpec.ball([0.5, 0.5], 0.3)
density = DensitySpec.uniform(square)

# one stream per (n, replication) keeps the runs reproducible
for n in (100, 1000, 10000):
    errs, vols = [], []
    for r in range(5):
        X = sample_binomial(n, density, RngStream(0, n, (r,)))
        res = sym_diff_volume(disc, X, 100_000, RngStream(1, n, (r,)))
        errs.append(res.sym_diff)
        vols.append(res.an_volume)
    print(f"n={n:6d}  mean |A Δ A_n| = {np.mean(errs):.5f}   mean |A_n| = {np.mean(vols):.5f}")

print(f"true |A| = {math.pi * 0.09:.5f}")

# %%
# A non-uniform design density: more points on the left half. The estimator
# still converges; only the constant changes.
lopsided = DensitySpec.piecewise_constant(square, [[1.5], [0.5]])
X = sample_binomial(10_000, lopsided, RngStream(2))
print("left-half fraction:", np.mean(X.locations[:, 0] < 0.5))
print("|A Δ A_n| at n=10^4:", sym_diff_volume(disc, X, 100_000, RngStream(3)).sym_diff)
