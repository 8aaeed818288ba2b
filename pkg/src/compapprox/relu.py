"""ReLU zonal networks on S^q and their pullbacks to R^q.

A zonal net is u -> sum_k a_k |u . v_k| (+ an optional even quadratic form
u^T C u). Through the lift, sqrt(|x|^2+1) a |lift(x) . v| equals
a (|x_k|^2+1)^(-1/2) |x . x_k + 1| with anchor x_k = v[:q] / v[q], a ReLU-type
unit |x . w + b| on R^q. Construction discretizes the reproducing identity
F(u) = int |u . v| (D_phi F)(v) dmu(v) at the nodes of a hemisphere rule.
"""

from dataclasses import dataclass
import itertools

import numpy as np

from .errors import DimensionError, EquatorError, KernelNullspaceError, PreconditionError
from .sampling import call
from .sphere import (
    HarmonicCoefficients,
    MAX_SPHERE_DEGREE,
    dphi_apply,
    harmonic_coefficients,
    hemisphere_rule,
    lift_function,
    project_kernel_null,
    sphere_quadrature,
    weighted_norm,
)

DELTA_POLE = 1e-6


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise DimensionError(f"expected points with {dim} coordinates, got shape {x.shape}")
    return x


def _quad(C, pts):
    return np.einsum("...i,ij,...j->...", pts, C, pts)


@dataclass(frozen=True)
class ZonalReluNet:
    q: int
    coefficients: np.ndarray
    directions: np.ndarray
    correction: np.ndarray = None

    def __post_init__(self):
        n = len(self.coefficients)
        if self.directions.shape != (n, self.q + 1):
            raise DimensionError("directions must have shape (n, q+1)")
        if n and np.max(np.abs(np.linalg.norm(self.directions, axis=1) - 1.0)) > 1e-12:
            raise DimensionError("directions must be unit vectors")

    def __len__(self):
        return len(self.coefficients)

    def evaluate(self, points):
        u = _as_points(points, self.q + 1)
        out = np.abs(u @ self.directions.T) @ self.coefficients
        if self.correction is not None:
            out = out + _quad(self.correction, u)
        return out

    def __call__(self, *u):
        return self.evaluate(np.stack(np.broadcast_arrays(*u), axis=-1))

    def __add__(self, other):
        if other.q != self.q:
            raise DimensionError("cannot add nets on different spheres")
        return ZonalReluNet(
            self.q,
            np.concatenate([self.coefficients, other.coefficients]),
            np.concatenate([self.directions, other.directions]),
            _add_corrections(self.correction, other.correction),
        )


@dataclass(frozen=True)
class EuclidReluNet:
    """Sum of ReLU-type units on R^q plus an optional quadratic correction.

    Without ``biases`` each unit is a_k (|x_k|^2+1)^(-1/2) |x . x_k + 1|. With
    ``biases`` the general form a_k |x . x_k + b_k| is evaluated instead.
    The correction C, a (q+1)x(q+1) symmetric matrix, contributes
    (x~^T C x~) / sqrt(|x|^2+1) with x~ = (x, 1).
    """

    q: int
    coefficients: np.ndarray
    anchors: np.ndarray
    correction: np.ndarray = None
    biases: np.ndarray = None

    def __post_init__(self):
        n = len(self.coefficients)
        if self.anchors.shape != (n, self.q):
            raise DimensionError("anchors must have shape (n, q)")
        if not np.all(np.isfinite(self.anchors)):
            raise ValueError("anchors must be finite")

    def __len__(self):
        return len(self.coefficients)

    @property
    def unit_scales(self):
        if self.biases is not None:
            return self.coefficients
        return self.coefficients / np.sqrt(np.sum(self.anchors**2, axis=1) + 1.0)

    def evaluate(self, points):
        x = _as_points(points, self.q)
        shift = 1.0 if self.biases is None else self.biases
        out = np.abs(x @ self.anchors.T + shift) @ self.unit_scales
        if self.correction is not None:
            xt = np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)
            out = out + _quad(self.correction, xt) / np.sqrt(np.sum(x * x, axis=-1) + 1.0)
        return out

    def __call__(self, *x):
        return self.evaluate(np.stack(np.broadcast_arrays(*x), axis=-1))

    def __add__(self, other):
        if other.q != self.q:
            raise DimensionError("cannot add nets of different input dimension")
        if (self.biases is None) != (other.biases is None):
            a, b = self.with_biases(), other.with_biases()
        else:
            a, b = self, other
        biases = None if a.biases is None else np.concatenate([a.biases, b.biases])
        return EuclidReluNet(
            self.q,
            np.concatenate([a.coefficients, b.coefficients]),
            np.concatenate([a.anchors, b.anchors]),
            _add_corrections(a.correction, b.correction),
            biases,
        )

    def with_biases(self):
        """The same net written in the general |x . w + b| form."""
        if self.biases is not None:
            return self
        return EuclidReluNet(self.q, self.unit_scales, self.anchors, self.correction, np.ones(len(self)))


def _add_corrections(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def evaluate(net, point):
    """Evaluate a zonal or Euclidean net at one point or a batch."""
    values = net.evaluate(point)
    return float(values) if np.ndim(values) == 0 else values


def to_euclidean(net, delta_pole=DELTA_POLE, on_equator="redistribute"):
    """Pull a zonal net back to R^q.

    Directions are first folded to the upper hemisphere (|u . v| does not see
    the sign of v). Directions with |v_{q+1}| < ``delta_pole`` have no finite
    anchor: with ``on_equator="redistribute"`` their coefficient moves to the
    retained direction with the largest |v . v'|; with ``"raise"`` an
    EquatorError is raised.
    """
    V = np.where(net.directions[:, -1:] < 0, -net.directions, net.directions)
    a = np.array(net.coefficients, dtype=float)
    bad = V[:, -1] < delta_pole
    if bad.any():
        if on_equator == "raise" or bad.all():
            raise EquatorError(f"{int(bad.sum())} directions within {delta_pole} of the equator")
        keep = np.flatnonzero(~bad)
        for k in np.flatnonzero(bad):
            target = keep[np.argmax(np.abs(V[keep] @ V[k]))]
            a[target] += a[k]
        V, a = V[~bad], a[~bad]
    anchors = V[:, :-1] / V[:, -1:]
    return EuclidReluNet(net.q, a, anchors, net.correction)


def _fit_quadratic_form(coeffs):
    """Symmetric C with u^T C u equal to a sphere function of degree <= 2."""
    q = coeffs.q
    rule = sphere_quadrature(q, 4)
    vals = coeffs.evaluate(rule.nodes)
    pairs = list(itertools.combinations_with_replacement(range(q + 1), 2))
    A = np.stack([rule.nodes[:, i] * rule.nodes[:, j] for i, j in pairs], axis=1)
    sol = np.linalg.lstsq(A, vals, rcond=None)[0]
    C = np.zeros((q + 1, q + 1))
    for (i, j), c in zip(pairs, sol):
        C[i, j] += 0.5 * c
        C[j, i] += 0.5 * c
    return C


def default_max_degree(q, n):
    """Largest even band limit the n-node hemisphere rule resolves."""
    exact = hemisphere_rule(q, n).exactness_degree
    L = min(exact // 2, MAX_SPHERE_DEGREE[q] // 2)
    return L - L % 2


def construct_zonal_approx(
    F, q, n, max_degree=None, null_tol=1e-10, correction=True, mass_tol=1e-8, analysis_degree=None
):
    """Zonal ReLU net with n terms approximating the even sphere function F.

    Steps: harmonic coefficients of F up to ``max_degree``, removal of the
    kernel-null degrees, G = D_phi(Pi F), then a_k = w_k G(v_k) at the nodes
    of an n-point hemisphere rule. The removed component (degree 2 at most
    is representable) is carried by the quadratic correction.
    """
    L = default_max_degree(q, n) if max_degree is None else int(max_degree)
    if analysis_degree is None:
        # D_phi amplifies aliased high-degree content roughly like l^2
        analysis_degree = min(MAX_SPHERE_DEGREE[q], 8 * L)
    rule = sphere_quadrature(q, max(analysis_degree, 2 * L))
    coeffs = harmonic_coefficients(F, L, rule)
    values = coeffs.values.copy()
    values[coeffs.degrees % 2 == 1] = 0.0  # aliasing noise only; dphi checks evenness
    coeffs = HarmonicCoefficients(q, L, values)
    kept, removed, null = project_kernel_null(coeffs, null_tol)
    C = None
    heavy = [l for l in null if removed.degree_mass(l) > mass_tol]
    if heavy:
        if not correction:
            raise KernelNullspaceError(heavy[0], removed.degree_mass(heavy[0]))
        if max(heavy) > 2:
            raise KernelNullspaceError(max(heavy), removed.degree_mass(max(heavy)))
        C = _fit_quadratic_form(removed)
    G = dphi_apply(kept, null_tol=null_tol)
    nodes = hemisphere_rule(q, n)
    a = nodes.weights * G.evaluate(nodes.nodes)
    return ZonalReluNet(q, a, nodes.nodes.copy(), C)


def weighted_error(f, net, plan):
    """Sampled ||f - net||_{w,q}."""
    return weighted_norm(lambda *x: np.asarray(f(*x), dtype=float) - net(*x), net.q, plan)


def approximate(f, q, n, max_degree=None, **kwargs):
    """Euclidean ReLU net for a target on R^q, through the lift."""
    if q not in (1, 2):
        raise DimensionError("ReLU construction is implemented for q in (1, 2)")
    zonal = construct_zonal_approx(lift_function(f, q), q, n, max_degree, **kwargs)
    return to_euclidean(zonal)


def sup_error_on_sphere(F, net, q, degree=40):
    """Max |F - net| over the nodes of a sphere rule (both hemispheres)."""
    pts = sphere_quadrature(q, degree).nodes
    return float(np.max(np.abs(call(F, pts) - net.evaluate(pts))))


__all__ = [
    "ZonalReluNet",
    "EuclidReluNet",
    "evaluate",
    "to_euclidean",
    "construct_zonal_approx",
    "weighted_error",
    "approximate",
]
