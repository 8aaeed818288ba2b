"""Registered analytic targets, constituent functions and G-functions."""

from dataclasses import dataclass
import math

import numpy as np

from .dag import DagSpec, GFunction, binary_tree_dag, fstar_dag
from .errors import ConfigError
from .special import hermite_functions


@dataclass(frozen=True)
class Target:
    name: str
    q: int
    func: object
    description: str
    gfunction: GFunction = None
    gamma: float = None

    @property
    def d(self):
        return self.gfunction.dag.d if self.gfunction is not None else self.q

    def __call__(self, *x):
        return self.func(*x)


def bump1(s):
    """(1 + |s|^3) exp(-s^2): smooth except for a third-order kink at 0."""
    return (1.0 + np.abs(s) ** 3) * np.exp(-s * s)


def ridge1(s):
    return s * np.exp(-0.5 * s * s)


def bump_product(a, b):
    return bump1(a) * bump1(b)


def ridge_product(a, b):
    return ridge1(a) * ridge1(b)


def smooth_bump(*x):
    """exp(1 - 1/(1 - r^2)) on the unit ball, zero outside."""
    r2 = sum(np.asarray(xi, dtype=float) ** 2 for xi in x)
    inside = r2 < 1.0
    safe = np.where(inside, r2, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)


def gauss(*x):
    return np.exp(-sum(np.asarray(xi, dtype=float) ** 2 for xi in x))


def psi3(x):
    return hermite_functions(3, x)[3]


def kink(x):
    """|x| exp(-x^2): a first-order kink, for slow-rate contrast runs."""
    return np.abs(x) * np.exp(-x * x)


def poly_mix(*args):
    """Mean of the arguments plus a tenth of their product."""
    return sum(args) / len(args) + 0.1 * math.prod(args)


def half_square(a):
    return 0.5 * a * a


def quad_q1(a, b):
    return 0.5 * (a * a + b * b)


def quad_q2(a, b):
    return 0.5 * a * b + 0.25 * a


def quad_q3(a, b):
    return 0.25 * (a - b) ** 2


def power_1024(t):
    return t**1024


# constituents that DAG files may refer to by name, with their arity
CONSTITUENTS = {
    "bump_product": (bump_product, 2),
    "ridge_product": (ridge_product, 2),
    "gauss2": (gauss, 2),
    "sum2": (lambda a, b: a + b, 2),
    "max2": (lambda a, b: np.maximum(a, b), 2),
    "half_square": (half_square, 1),
    "quad_q1": (quad_q1, 2),
    "quad_q2": (quad_q2, 2),
    "quad_q3": (quad_q3, 2),
    "power_1024": (power_1024, 1),
}
for _arity in (1, 2, 3, 4):
    CONSTITUENTS[f"poly_mix{_arity}"] = (poly_mix, _arity)


def binary_tree4():
    """h_2(h_1(x1, x2), h_1(x3, x4)) with the bottom constituent shared."""
    dag = binary_tree_dag(4)
    return GFunction(dag, {"h11": bump_product, "h12": bump_product, "h2": ridge_product})


def binary_tree8():
    dag = binary_tree_dag(8)
    cons = {v: bump_product for v in dag.nodes if v.startswith("h1")}
    cons.update({v: ridge_product for v in dag.nodes if v.startswith("h2")})
    cons["h3"] = ridge_product
    return GFunction(dag, cons)


def fstar():
    dag = fstar_dag()
    return GFunction(dag, {v: poly_mix for v in dag.nodes})


def q_example():
    """(Q1(Q2(x1, x2), Q3(x3, x4)))^1024 with bivariate quadratics Q1, Q2, Q3."""
    dag = DagSpec(
        ("x1", "x2", "x3", "x4"),
        {"Q2": ("x1", "x2"), "Q3": ("x3", "x4"), "Q1": ("Q2", "Q3"), "P": ("Q1",)},
        {"Q2": 2, "Q3": 2, "Q1": 2, "P": 1},
    )
    return GFunction(dag, {"Q2": quad_q2, "Q3": quad_q3, "Q1": quad_q1, "P": power_1024})


def _g(name, gf, description):
    return Target(name, gf.dag.q, gf, description, gfunction=gf)


TARGETS = {
    t.name: t
    for t in [
        Target("gauss_q1", 1, gauss, "exp(-x^2)"),
        Target("gauss_q2", 2, gauss, "exp(-|x|^2)"),
        Target("hermite3", 1, psi3, "orthonormal Hermite function psi_3"),
        Target("bump_q1", 1, smooth_bump, "C-infinity bump supported on [-1, 1]"),
        Target("bump_q2", 2, smooth_bump, "C-infinity bump supported on the unit disc"),
        Target("kink_q1", 1, kink, "|x| exp(-x^2)"),
        Target("bump_product_q2", 2, bump_product, "(1+|a|^3)(1+|b|^3) exp(-a^2-b^2)"),
        _g("binary_tree4", binary_tree4(), "ridge(bump(x1,x2), bump(x3,x4)), shared bottom layer"),
        _g("binary_tree8", binary_tree8(), "three-level binary tree on 8 inputs"),
        _g("fstar", fstar(), "ten-node G-function on 9 inputs, polynomial constituents"),
        _g("q_example", q_example(), "(Q1(Q2, Q3))^1024 with bivariate quadratics"),
    ]
}


def get_target(name):
    try:
        return TARGETS[name]
    except KeyError:
        raise ConfigError(f"unknown target {name!r}; known: {sorted(TARGETS)}") from None


def get_constituent(name, arity=None):
    try:
        fn, a = CONSTITUENTS[name]
    except KeyError:
        raise ConfigError(f"unknown constituent {name!r}; known: {sorted(CONSTITUENTS)}") from None
    if arity is not None and arity != a:
        raise ConfigError(f"constituent {name!r} has arity {a}, node declares {arity}")
    return fn
