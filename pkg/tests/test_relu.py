import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compapprox import relu, sphere
from compapprox.errors import DimensionError, EquatorError, KernelNullspaceError
from compapprox.sampling import SamplePlan, call
from oracles import kernel_oracle, random_even, random_sphere, y_col


def random_zonal(seed, q, n, min_pole=0.05):
    rng = np.random.default_rng(seed)
    V = random_sphere(rng, n, q)
    V[:, -1] = np.maximum(np.abs(V[:, -1]), min_pole) * np.sign(V[:, -1] + 0.5)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    C = rng.normal(size=(q + 1, q + 1))
    return relu.ZonalReluNet(q, rng.normal(size=n), V, C + C.T)


def decaying_target(q):
    # lifts to u_{q+1}^2 (1 + u_1^2 - u_1 u_{q+1} / 2): even, degree 4, zero on the equator
    def f(*x):
        X = np.stack(np.broadcast_arrays(*x), axis=-1)
        u = sphere.lift_point(X)
        F = u[..., -1] ** 2 * (1 + u[..., 0] ** 2 - 0.5 * u[..., 0] * u[..., -1])
        return np.sqrt(np.sum(X * X, axis=-1) + 1) * F

    return f


class TestEvaluate:
    def test_empty_net(self):
        net = relu.EuclidReluNet(2, np.zeros(0), np.zeros((0, 2)))
        assert relu.evaluate(net, np.array([0.3, -1.0])) == 0.0

    def test_single_pole_term(self):
        net = relu.EuclidReluNet(1, np.array([2.0]), np.zeros((1, 1)))
        np.testing.assert_allclose(net.evaluate(np.linspace(-5, 5, 11)[:, None]), 2.0)

    def test_dimension_mismatch(self):
        net = relu.EuclidReluNet(2, np.ones(1), np.zeros((1, 2)))
        with pytest.raises(DimensionError):
            net.evaluate(np.zeros(3))

    def test_unit_directions_required(self):
        with pytest.raises(DimensionError):
            relu.ZonalReluNet(1, np.ones(1), np.array([[1.0, 1.0]]))

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_linearity_of_sum(self, seed):
        a, b = random_zonal(seed, 2, 5), random_zonal(seed + 1, 2, 7)
        u = random_sphere(np.random.default_rng(seed), 20, 2)
        np.testing.assert_allclose((a + b).evaluate(u), a.evaluate(u) + b.evaluate(u), atol=1e-12)
        ea, eb = relu.to_euclidean(a), relu.to_euclidean(b).with_biases()
        x = np.random.default_rng(seed).normal(size=(20, 2))
        np.testing.assert_allclose((ea + eb).evaluate(x), ea.evaluate(x) + eb.evaluate(x), rtol=1e-12, atol=1e-10)

    def test_bias_form(self):
        net = relu.EuclidReluNet(1, np.array([1.5]), np.array([[2.0]]), biases=np.array([-1.0]))
        assert relu.evaluate(net, np.array([3.0])) == pytest.approx(1.5 * 5.0)

    def test_call_matches_evaluate(self):
        net = relu.to_euclidean(random_zonal(0, 2, 6))
        x = np.random.default_rng(1).normal(size=(9, 2))
        np.testing.assert_array_equal(net(x[:, 0], x[:, 1]), net.evaluate(x))


class TestPullback:
    def test_pole_direction(self):
        e = relu.to_euclidean(relu.ZonalReluNet(1, np.array([3.0]), np.array([[0.0, 1.0]])))
        np.testing.assert_array_equal(e.anchors, [[0.0]])
        np.testing.assert_allclose(e.evaluate(np.array([[-2.0], [7.0]])), 3.0)

    def test_diagonal_direction(self):
        s = 2**-0.5
        e = relu.to_euclidean(relu.ZonalReluNet(1, np.array([1.0]), np.array([[s, s]])))
        np.testing.assert_allclose(e.anchors, [[1.0]])
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(e.evaluate(x[:, None]), np.abs(x + 1) / math.sqrt(2), atol=1e-15)

    @pytest.mark.parametrize("q", [1, 2, 3])
    def test_identity_100_random_nets(self, q):
        worst = 0.0
        for seed in range(100):
            z = random_zonal(seed, q, 8)
            x = np.random.default_rng(seed + 1000).normal(scale=3, size=(25, q))
            lhs = relu.to_euclidean(z).evaluate(x)
            rhs = np.sqrt(np.sum(x * x, axis=1) + 1) * z.evaluate(sphere.lift_point(x))
            worst = max(worst, np.max(np.abs(lhs - rhs)))
        assert worst <= 1e-10

    def test_lower_hemisphere_directions_fold(self):
        z = random_zonal(3, 2, 6)
        flipped = relu.ZonalReluNet(2, z.coefficients, -z.directions, z.correction)
        x = np.random.default_rng(0).normal(size=(10, 2))
        np.testing.assert_allclose(relu.to_euclidean(flipped).evaluate(x), relu.to_euclidean(z).evaluate(x), atol=1e-12)

    def test_equator_raise(self):
        z = relu.ZonalReluNet(1, np.ones(2), np.array([[1.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(EquatorError):
            relu.to_euclidean(z, on_equator="raise")

    def test_equator_redistribute(self):
        s = 2**-0.5
        z = relu.ZonalReluNet(1, np.array([1.0, 2.0, 5.0]), np.array([[1.0, 0.0], [s, s], [0.0, 1.0]]))
        e = relu.to_euclidean(z)
        assert len(e) == 2
        np.testing.assert_allclose(e.coefficients, [3.0, 5.0])
        assert e.coefficients.sum() == pytest.approx(z.coefficients.sum())

    def test_constructed_q2_nets_have_no_equator_nodes(self):
        z = relu.construct_zonal_approx(sphere.lift_function(decaying_target(2), 2), 2, 128)
        e = relu.to_euclidean(z, on_equator="raise")
        x = np.random.default_rng(0).normal(scale=2, size=(50, 2))
        rhs = np.sqrt(np.sum(x * x, axis=1) + 1) * z.evaluate(sphere.lift_point(x))
        assert np.max(np.abs(e.evaluate(x) - rhs)) <= 1e-10


class TestConstruct:
    def test_zero_target(self):
        z = relu.construct_zonal_approx(lambda a, b, c: np.zeros_like(a), 2, 64)
        assert np.all(z.coefficients == 0)
        assert len(z) == 64

    def test_kernel_slice_q1(self):
        F = lambda a, b: np.abs(b)
        z = relu.construct_zonal_approx(F, 1, 128)
        assert relu.sup_error_on_sphere(F, z, 1, degree=400) <= 1e-3

    def test_kernel_image_coefficients(self):
        # F = int |u.v| g(v) dmu(v), g = 1 + Y_{4,1}; the construction's
        # coefficients must be a_k = w_k g(v_k)
        L = 4
        vals = np.zeros(len(sphere.harmonic_index(2, L)))
        vals[0] = math.sqrt(4 * math.pi)
        vals[y_col(2, L, 4, 1)] = 1.0
        g = sphere.HarmonicCoefficients(2, L, vals)
        F = sphere.kernel_apply(g)
        u = random_sphere(np.random.default_rng(0), 5, 2)
        np.testing.assert_allclose(F.evaluate(u), kernel_oracle(g, u), atol=1e-10)
        z = relu.construct_zonal_approx(F, 2, 200, max_degree=L)
        rule = sphere.hemisphere_rule(2, 200)
        np.testing.assert_allclose(z.coefficients, rule.weights * g.evaluate(rule.nodes), atol=1e-6)

    @pytest.mark.parametrize("q", [1, 2])
    def test_error_sequence_non_increasing(self, q):
        f = decaying_target(q)
        plan = SamplePlan(radius=5.0, points_per_axis=21, tail_radii=(50.0,))
        errs = [relu.weighted_error(f, relu.approximate(f, q, n, max_degree=4), plan) for n in (32, 64, 128, 256)]
        for a, b in zip(errs, errs[1:]):
            assert b <= 1.05 * a
        assert errs[-1] <= 0.5 * errs[1]

    @pytest.mark.parametrize("q,n", [(1, 32), (1, 128), (2, 32), (2, 128)])
    def test_quadrupling_halves_error(self, q, n):
        c = random_even(q, 4, {0, 2, 4}, 0)
        e1 = relu.sup_error_on_sphere(c, relu.construct_zonal_approx(c, q, n, max_degree=4), q)
        e4 = relu.sup_error_on_sphere(c, relu.construct_zonal_approx(c, q, 4 * n, max_degree=4), q)
        assert e4 <= 0.5 * e1

    @given(st.integers(0, 10_000), st.floats(-3, 3))
    @settings(max_examples=15, deadline=None)
    def test_linear_in_target(self, seed, s):
        a, b = random_even(2, 4, {0, 2, 4}, seed), random_even(2, 4, {0, 4}, seed + 7)
        za = relu.construct_zonal_approx(a, 2, 64, max_degree=4)
        zb = relu.construct_zonal_approx(b, 2, 64, max_degree=4)
        zs = relu.construct_zonal_approx(lambda *u: a(*u) + s * b(*u), 2, 64, max_degree=4)
        np.testing.assert_allclose(zs.coefficients, za.coefficients + s * zb.coefficients, atol=1e-10)

    def test_correction_carries_null_degree(self):
        # with an inflated tolerance degree 2 is treated as null and moved to the correction
        c = random_even(2, 2, {0, 2}, 1)
        z = relu.construct_zonal_approx(c, 2, 256, max_degree=2, null_tol=0.3)
        assert z.correction is not None
        u = random_sphere(np.random.default_rng(2), 30, 2)
        kept, removed, _ = sphere.project_kernel_null(c, null_tol=0.3)
        np.testing.assert_allclose(np.einsum("pi,ij,pj->p", u, z.correction, u), removed.evaluate(u), atol=1e-10)
        with pytest.raises(KernelNullspaceError):
            relu.construct_zonal_approx(c, 2, 256, max_degree=2, null_tol=0.3, correction=False)

    def test_higher_q_rejected(self):
        with pytest.raises(DimensionError):
            relu.approximate(lambda *x: x[0], 3, 64)


class TestWeightedError:
    plan = SamplePlan(radius=4.0, points_per_axis=17, tail_radii=(30.0,))

    def test_self_zero(self):
        net = relu.to_euclidean(random_zonal(1, 2, 9))
        assert relu.weighted_error(net, net, self.plan) == 0.0

    def test_weight_perturbation(self):
        net = relu.to_euclidean(random_zonal(2, 2, 9))
        f = lambda x, y: net(x, y) + np.sqrt(x * x + y * y + 1)
        assert relu.weighted_error(f, net, self.plan) == pytest.approx(1.0, abs=1e-12)
