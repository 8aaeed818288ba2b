import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compapprox import catalog, dag, gaussian, relu
from compapprox.errors import DimensionError, DomainError, IncompleteDataError, StepError
from compapprox.sampling import SamplePlan


def tree_gfunction(q, fn):
    spec = dag.binary_tree_dag(q)
    return dag.GFunction(spec, {v: fn for v in spec.nodes})


def random_binary_tree4(seed):
    rng = np.random.default_rng(seed)
    spec = dag.binary_tree_dag(4)
    cons = {}
    for v in spec.nodes:
        amp, a, b, t = rng.uniform(0.3, 1.0), *rng.uniform(0.3, 1.0, 2), rng.uniform(-0.5, 0.5)

        def h(s1, s2, amp=amp, a=a, b=b, t=t):
            return amp * np.exp(-(s1 * a) ** 2 - (s2 * b - t) ** 2) * np.cos(s1 * a + s2 * b)

        cons[v] = h
    return dag.GFunction(spec, cons)


class TestValidate:
    def test_binary_tree_8(self):
        r = dag.validate_dag(dag.binary_tree_dag(8))
        assert r.valid and r.node_count == 7 and r.d == 2 and r.sink == "h3"

    def test_fstar(self):
        spec = dag.fstar_dag()
        r = dag.validate_dag(spec)
        assert r.valid and spec.q == 9 and r.node_count == 10 and r.sink == "h19"

    def test_two_sinks(self):
        spec = dag.DagSpec(("x1", "x2"), {"a": ("x1",), "b": ("x2",)})
        r = dag.validate_dag(spec)
        assert not r.valid
        assert any("sink" in v for v in r.violations)

    def test_cycle(self):
        spec = dag.DagSpec(("x1",), {"a": ("x1", "b"), "b": ("a",), "c": ("b",)})
        r = dag.validate_dag(spec)
        assert not r.valid and any("cycle" in v for v in r.violations)

    def test_arity_mismatch_and_unknown(self):
        spec = dag.DagSpec(("x1", "x2"), {"a": ("x1", "y")}, {"a": 3})
        r = dag.validate_dag(spec)
        assert len(r.violations) == 2

    def test_power_of_two_required(self):
        with pytest.raises(DomainError):
            dag.binary_tree_dag(6)

    def test_order_is_topological(self):
        spec = dag.fstar_dag()
        pos = {v: i for i, v in enumerate(spec.order())}
        for a, v in spec.edges:
            if a in spec.nodes:
                assert pos[a] < pos[v]


class TestEvaluate:
    def test_sum_tree(self):
        f = tree_gfunction(8, lambda a, b: a + b)
        assert dag.evaluate_gfunction(f, np.ones(8)) == 8.0

    def test_max_tree(self):
        f = tree_gfunction(8, lambda a, b: np.maximum(a, b))
        assert dag.evaluate_gfunction(f, np.ones(8)) == 1.0

    def test_single_node(self):
        h = lambda a, b: np.sin(a) * b
        f = dag.GFunction(dag.DagSpec(("x1", "x2"), {"h": ("x1", "x2")}), {"h": h})
        x = np.random.default_rng(0).normal(size=(10, 2))
        np.testing.assert_array_equal(dag.evaluate_gfunction(f, x), h(x[:, 0], x[:, 1]))

    def test_fanout(self):
        # the same node output reaches two consumers
        spec = dag.DagSpec(("x",), {"a": ("x",), "b": ("a",), "c": ("a", "b")})
        f = dag.GFunction(spec, {"a": lambda x: x + 1, "b": lambda a: 2 * a, "c": lambda a, b: a * b})
        assert dag.evaluate_gfunction(f, np.array([1.0])) == 2.0 * 4.0

    def test_failure_names_node(self):
        spec = dag.DagSpec(("x",), {"a": ("x",), "b": ("a",)})

        def boom(a):
            raise RuntimeError("bad constituent")

        f = dag.GFunction(spec, {"a": lambda x: x, "b": boom})
        with pytest.raises(StepError, match="node b"):
            f(np.zeros(3))

    def test_dimension(self):
        with pytest.raises(DimensionError):
            dag.evaluate_gfunction(tree_gfunction(4, lambda a, b: a), np.ones(3))

    def test_missing_constituent(self):
        with pytest.raises(IncompleteDataError):
            dag.GFunction(dag.binary_tree_dag(4), {"h11": np.add})

    def test_catalog_fstar_matches_manual(self):
        f = catalog.fstar()
        x = np.random.default_rng(1).uniform(-1, 1, 9)
        pm = catalog.poly_mix
        h12 = pm(*x[5:9])
        h16 = pm(h12)
        h10 = pm(x[0], x[1], x[2], h16)
        h11 = pm(x[3], x[4])
        h17 = pm(pm(h10, h11), pm(h10, h11), h16)
        h18 = pm(pm(h11, h12), h16)
        assert dag.evaluate_gfunction(f, x) == pytest.approx(pm(h17, h18), abs=1e-15)


class TestGNorm:
    plan = SamplePlan(radius=2.0, points_per_axis=9)

    def test_zero(self):
        f = tree_gfunction(4, lambda a, b: np.zeros(np.broadcast(a, b).shape))
        assert dag.g_norm(f, "sup", self.plan) == 0.0

    def test_one_node(self):
        spec = dag.binary_tree_dag(4)
        zero = lambda a, b: np.zeros(np.broadcast(a, b).shape)
        cons = {v: zero for v in spec.nodes}
        cons["h2"] = lambda a, b: 2.0 + 0 * a * b
        assert dag.g_norm(dag.GFunction(spec, cons), "sup", self.plan) == 2.0

    @given(st.floats(0.1, 5), st.floats(0.1, 5))
    @settings(max_examples=20, deadline=None)
    def test_additive_over_nodes(self, s1, s2):
        spec = dag.binary_tree_dag(4)
        base = {v: (lambda a, b: np.exp(-a * a - b * b)) for v in spec.nodes}
        pert = dict(base)
        pert["h11"] = lambda a, b, s=s1: s * np.exp(-a * a - b * b)
        pert["h2"] = lambda a, b, s=s2: s * np.exp(-a * a - b * b)
        n0 = dag.g_norm(dag.GFunction(spec, base), "weighted", self.plan)
        n1 = dag.g_norm(dag.GFunction(spec, pert), "weighted", self.plan)
        assert n1 == pytest.approx(n0 + (s1 - 1) + (s2 - 1), rel=1e-12)


class TestBound:
    def test_single_node(self):
        spec = dag.DagSpec(("x",), {"a": ("x",)})
        assert dag.error_propagation_bound({"a": 0.3}, {"a": 5.0}, spec) == 0.3

    @pytest.mark.parametrize("c", [1.0, 1.5, 4.0])
    def test_two_children(self, c):
        spec = dag.binary_tree_dag(2 * 2)
        eps = 0.01
        bound = dag.error_propagation_bound({v: eps for v in spec.nodes}, {v: c for v in spec.nodes}, spec)
        assert bound == pytest.approx((2 * c + 1) * eps)
        assert bound <= 3 * c * eps + 1e-15

    def test_chain(self):
        spec = dag.DagSpec(("x",), {"a": ("x",), "b": ("a",), "c": ("b",)})
        b = dag.error_propagation_bound({"a": 0.1, "b": 0.0, "c": 0.0}, {"a": 9.0, "b": 2.0, "c": 3.0}, spec)
        assert b == pytest.approx(0.6)

    def test_path_sum_with_fanout(self):
        # a reaches c directly and through b: weight L_c + L_b L_c
        spec = dag.DagSpec(("x",), {"a": ("x",), "b": ("a",), "c": ("a", "b")})
        w = dag.path_weights(spec, {"a": 1.0, "b": 2.0, "c": 3.0})
        assert w == {"c": 1.0, "b": 3.0, "a": 3.0 + 6.0}

    def test_missing_lipschitz(self):
        spec = dag.binary_tree_dag(4)
        with pytest.raises(IncompleteDataError):
            dag.error_propagation_bound({v: 0.1 for v in spec.nodes}, {"h11": 1.0}, spec)

    def test_nonpositive_lipschitz(self):
        spec = dag.binary_tree_dag(4)
        with pytest.raises(DomainError):
            dag.error_propagation_bound({v: 0.1 for v in spec.nodes}, {v: 0.0 for v in spec.nodes}, spec)

    def test_random_instances_bound_holds(self):
        ok = 0
        for seed in range(20):
            f = random_binary_tree4(seed)
            deep = dag.deep_approximate(f, dag.GAUSSIAN, 2)
            lip = {v: 1.2 * dag.estimate_lipschitz(f.constituents[v], deep.node_boxes[v]) for v in f.dag.nodes}
            bound = dag.error_propagation_bound(deep.node_errors, lip, f.dag)
            x = np.random.default_rng(seed).uniform(-3, 3, size=(10_000, 4))
            measured = np.max(np.abs(f(*x.T) - deep.evaluate(x)))
            ok += measured <= bound
        assert ok == 20


class TestLipschitz:
    box = (np.array([-1.0, -2.0]), np.array([2.0, 1.0]))

    def test_sum(self):
        assert dag.estimate_lipschitz(lambda a, b: a + b, self.box) == pytest.approx(math.sqrt(2), rel=1e-6)

    def test_constant(self):
        assert dag.estimate_lipschitz(lambda a, b: 0 * a + 4.0, self.box) == 0.0

    def test_scaled(self):
        assert dag.estimate_lipschitz(lambda a, b: 3 * a, self.box) == pytest.approx(3.0, rel=1e-6)

    def test_lower_estimate(self):
        # sin has Lipschitz constant 1 on any box containing 0
        est = dag.estimate_lipschitz(lambda a: np.sin(a), (np.array([-1.0]), np.array([1.0])))
        assert 0.99 <= est <= 1.0 + 1e-9


class TestDeepApproximate:
    def test_single_node_is_shallow(self):
        h = lambda a, b: np.exp(-a * a - b * b) * (1 + a)
        f = dag.GFunction(dag.DagSpec(("x1", "x2"), {"h": ("x1", "x2")}), {"h": h})
        deep = dag.deep_approximate(f, dag.GAUSSIAN, 3)
        shallow = gaussian.approximate(h, 2, 3)
        np.testing.assert_array_equal(deep.node_nets["h"].core, shallow.core)
        x = np.random.default_rng(0).normal(size=(50, 2))
        np.testing.assert_array_equal(deep.evaluate(x), shallow.evaluate(x))

    def test_single_node_relu(self):
        h = lambda a: a * np.exp(-a * a)
        f = dag.GFunction(dag.DagSpec(("x",), {"h": ("x",)}), {"h": h})
        deep = dag.deep_approximate(f, dag.RELU, 64)
        shallow = relu.approximate(h, 1, 64)
        np.testing.assert_array_equal(deep.node_nets["h"].coefficients, shallow.coefficients)

    def test_zero_gfunction(self):
        f = tree_gfunction(4, lambda a, b: np.zeros(np.broadcast(a, b).shape))
        deep = dag.deep_approximate(f, dag.GAUSSIAN, 2)
        assert all(e == 0.0 for e in deep.node_errors.values())

    def test_composition_consistency(self):
        f = catalog.binary_tree4()
        deep = dag.deep_approximate(f, dag.GAUSSIAN, 2)
        x = np.random.default_rng(3).normal(size=(40, 4))
        n = deep.node_nets
        manual = n["h2"](n["h11"](x[:, 0], x[:, 1]), n["h12"](x[:, 2], x[:, 3]))
        np.testing.assert_allclose(deep.evaluate(x), manual, atol=1e-12)

    def test_shared_constituent_built_once(self):
        deep = dag.deep_approximate(catalog.binary_tree4(), dag.GAUSSIAN, 2)
        assert deep.node_nets["h11"] is deep.node_nets["h12"]
        assert deep.unit_count(dedupe_shared=True) < deep.unit_count()

    def test_failure_names_node(self):
        # ReLU construction is limited to arity <= 2
        spec = dag.DagSpec(("x", "y", "z"), {"h": ("x", "y", "z")})
        f = dag.GFunction(spec, {"h": lambda x, y, z: x * y * z})
        with pytest.raises(StepError, match="node h"):
            dag.deep_approximate(f, dag.RELU, 16)

    def test_boxes_cover_probe_range(self):
        f = catalog.binary_tree4()
        probe = dag.default_probe(4, count=500)
        boxes = dag.probe_boxes(f, probe)
        vals = f.node_values(probe)
        for v, args in f.dag.nodes.items():
            lo, hi = boxes[v]
            for i, a in enumerate(args):
                assert lo[i] <= vals[a].min() and vals[a].max() <= hi[i]


class TestParameterCount:
    def test_relu_tree_actual_count(self):
        # each binary node is a bivariate ReLU net with n units of 4 parameters
        f = tree_gfunction(4, lambda a, b: np.exp(-a * a - b * b))
        n = 32
        deep = dag.deep_approximate(f, dag.RELU, n, max_degree=4)
        units = deep.unit_count()
        assert units == sum(len(net) for net in deep.node_nets.values())
        assert deep.parameter_count() == 4 * units
