"""
How far can a Voronoi cell feel the rest of the sample?
=======================================================

The cone certificate bounds the region that determines a cell: split the
plane around a nucleus into twelve sectors, find the nearest neighbour in
each widened sector, and double the largest of those distances. Points
farther away than this radius cannot change the cell.
"""

import numpy as np

from stabmeasure import KnnIndex, PointSet, RegionSpec, RngStream, stabilization_radius_cone
from stabmeasure.geometry import voronoi_volumes_mc

square = RegionSpec.unit_cube(2)
g = np.random.default_rng(0)
X = PointSet(g.random((200, 2)))
x = X.locations[0]

cert = stabilization_radius_cone(x, X, square, exclude=0)
print("per-sector distances:", np.round(cert.per_cone_distances, 4))
print("certificate radius R =", round(cert.radius, 4))

# %%
# Add points just outside the radius and compare the cell on a shared batch
angles = g.uniform(0, 2 * np.pi, 50)
extra = x + (cert.radius * (1 + 1e-9) + g.uniform(0, 0.2, 50))[:, None] * np.column_stack(
    [np.cos(angles), np.sin(angles)])
Y = PointSet(np.vstack([X.locations, extra]))
z = square.sample_uniform(200_000, RngStream(1))
before = KnnIndex(X).query(z, 1)[0][:, 0] == 0
after = KnnIndex(Y).query(z, 1)[0][:, 0] == 0
print("labels changed:", int(np.sum(before != after)))

# %%
# Tail of the rescaled cell volume n|V| for uniform points
n = 10_000
vols = n * voronoi_volumes_mc(PointSet(g.random((n, 2))), square, 500_000, RngStream(2))
for t in (1, 2, 3, 4):
    print(f"P(n|V| > {t}) = {np.mean(vols > t):.4f}")
