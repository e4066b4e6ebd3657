import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabmeasure import (
    CellRestriction,
    DensitySpec,
    Functional,
    MarkedPoint,
    PointMass,
    PointSet,
    RegionSpec,
    RngStream,
    TestFunction,
    add_one_costs,
    integrate,
    nu_total,
    sample_binomial,
    xi_lambda,
    xi_star,
)
from stabmeasure.random_measure import (
    g_sum,
    local_cell_volume,
    moment_of_new_point,
    point_weights,
    xi_lambda_dilated,
)

UNIT = RegionSpec.box([0.0], [1.0])
SQUARE = RegionSpec.unit_cube(2)


def linear_grad(b):
    b = np.asarray(b, dtype=float)
    return lambda x: np.broadcast_to(b, np.shape(x))


class TestXiLambda:
    def test_voronoi_1d_cell_mass(self):
        X = PointSet.from_points([0.25, 0.75])
        mu = xi_lambda(Functional.voronoi(), 0, X, 10.0, UNIT)
        assert isinstance(mu, CellRestriction)
        star = xi_star(mu)
        assert star.weight == pytest.approx(5.0, abs=1e-12)
        assert star.location[0] == 0.25

    def test_knn_weight(self):
        X = PointSet(np.array([[0.5, 0.5], [0.6, 0.5], [0.9, 0.9]]))
        func = Functional.knn_quadratic(linear_grad([1.0, 2.0]))
        mu = xi_lambda(func, 0, X, 4.0, SQUARE)
        # λ^{2/d} (b·(N − x))² = 4 · 0.1²
        assert mu.weight == pytest.approx(4 * 0.01, rel=1e-12)

    def test_knn_zero_gradient(self):
        X = PointSet(np.random.default_rng(0).random((10, 2)))
        mu = xi_lambda(Functional.knn_quadratic(linear_grad([0, 0])), 3, X, 50.0, SQUARE)
        assert mu.weight == 0.0

    def test_unit_scale_unrescaled(self):
        X = PointSet(np.random.default_rng(1).random((10, 2)))
        func = Functional.knn_quadratic(linear_grad([1.0, -1.0]), k=2)
        big = RegionSpec.box([-100, -100], [100, 100])
        w = xi_lambda(func, 0, X, 1.0, big).weight
        d2 = ((X.locations - X.locations[0]) ** 2).sum(1)
        d2[0] = np.inf
        j = np.argsort(d2, kind="stable")[1]
        assert w == pytest.approx(((X.locations[j] - X.locations[0]) @ [1.0, -1.0]) ** 2, rel=1e-12)

    def test_adjoined_marked_point(self):
        X = PointSet(np.array([[0.2], [0.7]]), np.array([0.0, 1.0]))
        func = Functional.knn_quadratic(linear_grad([0.0]), marked=True)
        mu = xi_lambda(func, MarkedPoint(np.array([0.6]), 0.25), X, 1.0, UNIT)
        assert mu.weight == pytest.approx(0.75 ** 2)

    @pytest.mark.parametrize("d", [1, 2])
    def test_dilated_path_agrees_knn(self, d):
        g = np.random.default_rng(d)
        X = PointSet(g.random((40, d)), g.normal(size=40))
        omega = RegionSpec.unit_cube(d)
        for func in (Functional.knn_quadratic(linear_grad(np.ones(d)), k=2),
                     Functional.knn_quadratic(linear_grad(np.ones(d)), k=1, marked=True)):
            for i in range(0, 40, 7):
                direct = xi_lambda(func, i, X, 37.0, omega).weight
                dil = xi_lambda_dilated(func, i, X, 37.0, omega)
                assert dil == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_dilated_path_agrees_voronoi_1d(self):
        X = PointSet(np.random.default_rng(3).random((25, 1)))
        for i in range(25):
            direct = xi_star(xi_lambda(Functional.voronoi(), i, X, 25.0, UNIT)).weight
            assert xi_lambda_dilated(Functional.voronoi(), i, X, 25.0, UNIT) == pytest.approx(direct, rel=1e-12)

    def test_dilated_path_agrees_voronoi_2d(self):
        X = PointSet(np.random.default_rng(4).random((15, 2)))
        m = 200_000
        direct = xi_star(xi_lambda(Functional.voronoi(), 2, X, 15.0, SQUARE), m=m, rng=RngStream(4)).weight
        dil = xi_lambda_dilated(Functional.voronoi(), 2, X, 15.0, SQUARE, m=m, rng=RngStream(5))
        p = direct / 15.0
        se = 15.0 * math.sqrt(2 * p * (1 - p) / m)
        assert abs(dil - direct) <= 4 * se


class TestXiStarIntegrate:
    def test_point_mass_unchanged(self):
        mu = PointMass(np.array([0.3, 0.4]), 2.5)
        assert xi_star(mu, SQUARE) is mu

    def test_point_mass_outside(self):
        assert xi_star(PointMass(np.array([1.5, 0.4]), 2.5), SQUARE).weight == 0.0

    def test_nucleus_outside_region(self):
        X = PointSet.from_points([0.25, 1.5])
        assert xi_star(xi_lambda(Functional.voronoi(), 1, X, 3.0, UNIT)).weight == 0.0

    def test_constant_on_point_mass(self):
        assert integrate(TestFunction.constant(1.0), PointMass(np.array([7.0]), 3.25)) == 3.25

    def test_zero_function(self):
        mu = xi_lambda(Functional.voronoi(), 0, PointSet.from_points([0.25, 0.75]), 1.0, UNIT)
        assert integrate(TestFunction.constant(0.0), mu, 1000, RngStream(0)) == 0.0

    def test_indicator_on_cell(self):
        mu = xi_lambda(Functional.voronoi(), 0, PointSet.from_points([0.25, 0.75]), 1.0, UNIT)
        m = 100_000
        val = integrate(TestFunction.indicator(RegionSpec.box([0.0], [0.5])), mu, m, RngStream(1))
        assert abs(val - 0.5) <= 3 * math.sqrt(0.25 / m)

    def test_a1_equivalence(self):
        X = PointSet(np.random.default_rng(5).random((30, 2)))
        func = Functional.knn_quadratic(linear_grad([0.3, -1.2]), k=2)
        f = TestFunction(lambda x: np.sin(3 * x[:, 0]) + x[:, 1], 2.0)
        for i in range(30):
            mu = xi_lambda(func, i, X, 30.0, SQUARE)
            assert integrate(f, mu) == integrate(f, xi_star(mu, SQUARE))

    def test_linearity_point_mass(self):
        mu = PointMass(np.array([0.2, 0.9]), 1.7)
        f = TestFunction(lambda x: x[:, 0] ** 2, 1.0)
        g = TestFunction(lambda x: np.cos(x[:, 1]), 1.0)
        lhs = integrate(f.combine(2.0, g, -3.0), mu)
        assert lhs == pytest.approx(2 * integrate(f, mu) - 3 * integrate(g, mu), rel=1e-15, abs=1e-15)

    def test_linearity_cell_shared_batch(self):
        X = PointSet(np.random.default_rng(6).random((10, 2)))
        mu = xi_lambda(Functional.voronoi(), 4, X, 10.0, SQUARE)
        f = TestFunction(lambda x: x[:, 0], 1.0)
        g = TestFunction.indicator(RegionSpec.ball([0.5, 0.5], 0.3))
        lhs = integrate(f.combine(0.5, g, 2.0), mu, 50_000, RngStream(7))
        rhs = 0.5 * integrate(f, mu, 50_000, RngStream(7)) + 2.0 * integrate(g, mu, 50_000, RngStream(7))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
    @settings(max_examples=30, deadline=None)
    def test_sup_bound(self, seed, c):
        g = np.random.default_rng(seed)
        X = PointSet(g.random((8, 2)))
        f = TestFunction.constant(c)
        mu = xi_lambda(Functional.voronoi(), 0, X, 8.0, SQUARE)
        mass = xi_star(mu, m=5000, rng=RngStream(seed)).weight
        assert abs(integrate(f, mu, 5000, RngStream(seed))) <= f.sup_bound * mass + 1e-12


class TestNu:
    def test_voronoi_partition(self):
        n = 200
        X = PointSet(np.random.default_rng(8).random((n, 2)))
        total = nu_total(TestFunction.constant(1.0), Functional.voronoi(), X, n, SQUARE, 10_000, RngStream(8))
        assert total == pytest.approx(n, rel=1e-12)

    def test_single_point(self):
        X = PointSet.from_points([0.4])
        assert nu_total(TestFunction.constant(1.0), Functional.voronoi(), X, 1.0, UNIT, 100, RngStream(0)) == 1.0

    def test_g_sum_zero_for_point_masses(self):
        X = PointSet(np.random.default_rng(9).random((10, 2)))
        func = Functional.knn_quadratic(linear_grad([1, 1]))
        assert g_sum(TestFunction.constant(1.0), func, X, 10.0, SQUARE) == 0.0

    def test_first_moment_identity(self):
        # n⁻¹ E⟨f, ν_{λ,n}⟩ = E⟨f, ξ_λ(X; X_{n−1})⟩ with X an independent extra point
        n, reps = 20, 1000
        dens = DensitySpec.uniform(SQUARE)
        func = Functional.knn_quadratic(linear_grad([1.0, 0.5]), k=1)
        f = TestFunction(lambda x: 1 + x[:, 0], 2.0)
        gen = RngStream(10).generator()
        lhs, rhs = [], []
        for _ in range(reps):
            X = sample_binomial(n, dens, gen)
            lhs.append(nu_total(f, func, X, n, SQUARE) / n)
            Y = sample_binomial(n, dens, gen)
            rhs.append(integrate(f, xi_lambda(func, n - 1, Y, n, SQUARE)))
        lhs, rhs = np.array(lhs), np.array(rhs)
        se = math.sqrt(lhs.var(ddof=1) / reps + rhs.var(ddof=1) / reps)
        assert abs(lhs.mean() - rhs.mean()) <= 3 * se


class TestAddOne:
    def test_two_point_hand_case(self):
        X = PointSet.from_points([0.2, 0.6])
        costs = add_one_costs(TestFunction.constant(1.0), Functional.voronoi(), X, 2.0, UNIT, 1000, RngStream(0))
        assert costs.delta_tilde == pytest.approx(2.4, abs=1e-12)
        assert costs.detail["positive_part"] == 0.0
        # total mass is λ|Ω| before and after
        assert costs.delta == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n", [5, 50])
    def test_voronoi_1d_identity(self, n):
        g = np.random.default_rng(n)
        for _ in range(20):
            X = PointSet(g.random((n, 1)))
            costs = add_one_costs(TestFunction.constant(1.0), Functional.voronoi(), X, n, UNIT, 100, RngStream(1))
            new_cell = point_weights(Functional.voronoi(), X, 1.0, UNIT)[-1]
            assert abs(costs.delta_tilde - 2 * n * new_cell) <= 1e-12

    def test_voronoi_2d_identity_shared_batch(self):
        n = 50
        X = PointSet(np.random.default_rng(11).random((n, 2)))
        costs = add_one_costs(TestFunction.constant(1.0), Functional.voronoi(), X, n, SQUARE, 100_000, RngStream(11))
        assert costs.delta_tilde == pytest.approx(2 * costs.detail["new_point_mass"], rel=1e-12)
        assert costs.detail["positive_part"] == 0.0

    @given(st.integers(0, 2**32 - 1), st.integers(2, 30), st.sampled_from(["voronoi", "knn", "marked"]))
    @settings(max_examples=40, deadline=None)
    def test_domination(self, seed, n, kind):
        g = np.random.default_rng(seed)
        d = 1 if kind == "voronoi" and seed % 2 else 2
        omega = RegionSpec.unit_cube(d)
        X = PointSet(g.random((n, d)), g.normal(size=n))
        if kind == "voronoi":
            func = Functional.voronoi()
        else:
            func = Functional.knn_quadratic(linear_grad(g.normal(size=d)), k=int(g.integers(1, 3)),
                                            marked=kind == "marked")
        f = TestFunction(lambda x: np.cos(5 * x[:, 0]), 1.0)
        costs = add_one_costs(f, func, X, float(n), omega, 4000, RngStream(seed))
        tol = 1e-9 * (1 + costs.delta_tilde)
        assert abs(costs.delta) <= f.sup_bound * costs.delta_tilde + tol
        assert abs(costs.delta_prime) <= 4 * f.sup_bound * costs.delta_tilde + tol

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            add_one_costs(TestFunction.constant(1.0), Functional.voronoi(), PointSet.from_points([0.5]), 1.0, UNIT)

    def test_moment_diagnostic_bounded(self):
        # third moment of n|V(X_n; X_n)| stays bounded as n grows
        dens = DensitySpec.uniform(SQUARE)
        means = []
        for n in (100, 1000, 10000):
            gen = RngStream(12, n).generator()
            vals = [moment_of_new_point(Functional.voronoi(), sample_binomial(n, dens, gen), n, SQUARE, 3,
                                        4000, gen) for _ in range(300)]
            means.append(np.mean(vals))
        assert max(means) <= 2 * min(means)
        assert max(means) < 20

    def test_local_cell_volume_matches_partition(self):
        X = PointSet(np.random.default_rng(13).random((60, 2)))
        vols = point_weights(Functional.voronoi(), X, 1.0, SQUARE, 400_000, RngStream(13))
        for i in (0, 17, 59):
            loc = local_cell_volume(i, X, SQUARE, 100_000, RngStream(i))
            assert loc == pytest.approx(vols[i], rel=0.05)
