"""Lifting R^q onto the sphere S^q, spherical quadrature and harmonic analysis.

The lift is the parametrization of the upper hemisphere

    u_j = x_j / sqrt(|x|^2 + 1),   u_{q+1} = 1 / sqrt(|x|^2 + 1),

and a function f on R^q becomes the even sphere function
S(f)(u) = |u_{q+1}| f(u_1/u_{q+1}, ..., u_q/u_{q+1}) (zero on the equator).
Harmonic analysis is implemented for q = 1 (Fourier series on the circle) and
q = 2 (real spherical harmonics). The D_phi operator divides harmonic
coefficients by the Funk-Hecke eigenvalues of the kernel |u.v|.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import (
    DimensionError,
    EquatorError,
    KernelNullspaceError,
    PreconditionError,
    UnsupportedDegreeError,
)
from .sampling import call, check_finite
from .special import abs_kernel_coefficients, gauss_jacobi_rule, sphere_area, ultraspherical_all

# trapezoid rules on the circle are cheap, product rules on S^2 are not
MAX_SPHERE_DEGREE = {1: 1024, 2: 60}
HARMONIC_DIMS = (1, 2)


def lift_point(x):
    """Map x in R^q (or a batch ``(..., q)``) onto the open upper hemisphere."""
    x = np.asarray(x, dtype=float)
    r = 1.0 / np.sqrt(np.sum(x * x, axis=-1, keepdims=True) + 1.0)
    return np.concatenate([x * r, r], axis=-1)


def unlift_point(u):
    u = np.asarray(u, dtype=float)
    pole = u[..., -1:]
    if np.any(pole <= 0):
        raise EquatorError("unlift needs u_{q+1} > 0; the equator has no preimage")
    return u[..., :-1] / pole


@dataclass(frozen=True)
class WeightedFunction:
    """A target on R^q for the weighted sup-norm sup |f(x)| / sqrt(|x|^2 + 1).

    ``decays`` records the caller's claim that f(x)/sqrt(|x|^2+1) -> 0, which
    is what makes the lifted function continuous up to the equator.
    """

    func: object
    q: int
    decays: bool = True

    def __call__(self, *x):
        return self.func(*x)


def lift_function(f, q=None):
    """Return S(f) as a function of the sphere coordinates u_1..u_{q+1}."""
    if isinstance(f, WeightedFunction):
        if not f.decays:
            raise PreconditionError("lift_function needs a target with declared decay")
        q = f.q
    if q is None:
        raise DimensionError("q is required when f is a plain callable")

    def lifted(*u):
        u = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in u])
        if len(u) != q + 1:
            raise DimensionError(f"expected {q + 1} sphere coordinates, got {len(u)}")
        pole = np.abs(u[-1])
        on_equator = pole == 0
        safe = np.where(on_equator, 1.0, u[-1])
        vals = pole * np.asarray(f(*[c / safe for c in u[:-1]]), dtype=float)
        return np.where(on_equator, 0.0, vals)

    return lifted


def weighted_norm(f, q, plan):
    """Lower estimate of ess sup |f(x)| / sqrt(|x|^2 + 1) over the plan's samples."""
    pts = plan.points(q)
    vals = call(f, pts)
    check_finite(vals, pts)
    weight = np.sqrt(np.sum(pts * pts, axis=1) + 1.0)
    return float(np.max(np.abs(vals) / weight))


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes on S^q with positive weights summing to omega_q.

    ``even_only`` marks folded rules whose nodes all lie in the upper
    hemisphere; those integrate even functions only (each node stands for
    itself and its antipode).
    """

    q: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    even_only: bool = False

    def __len__(self):
        return len(self.weights)

    def integrate(self, F):
        return float(np.dot(self.weights, call(F, self.nodes)))


def _check_q(q):
    if q not in HARMONIC_DIMS:
        raise DimensionError(f"harmonic analysis is implemented for q in {HARMONIC_DIMS}, got {q}")


def _circle(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _product_nodes(z, wz, nlon, weight_factor=1.0):
    phi = 2.0 * np.pi * np.arange(nlon) / nlon
    Z, P = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1.0 - Z * Z)
    nodes = np.stack([s * np.cos(P), s * np.sin(P), Z], axis=-1).reshape(-1, 3)
    weights = np.outer(wz, np.full(nlon, 2.0 * np.pi / nlon)).ravel() * weight_factor
    return nodes, weights


def sphere_quadrature(q, degree):
    """Positive rule on S^q exact for spherical polynomials up to ``degree``.

    q = 1: equispaced points (an even count, so the rule is antipodally
    symmetric). q = 2: Gauss-Legendre in z times equispaced longitudes.
    """
    _check_q(q)
    if degree < 0 or degree > MAX_SPHERE_DEGREE[q]:
        raise UnsupportedDegreeError(f"sphere rule degree {degree} outside 0..{MAX_SPHERE_DEGREE[q]}")
    n_even = 2 * (degree // 2) + 2
    if q == 1:
        theta = 2.0 * np.pi * np.arange(n_even) / n_even
        return SphereQuadrature(1, _circle(theta), np.full(n_even, 2.0 * np.pi / n_even), n_even - 1)
    nlat = (degree + 2) // 2
    rule = gauss_jacobi_rule(nlat, 2)
    nodes, weights = _product_nodes(rule.nodes, rule.weights, n_even)
    return SphereQuadrature(2, nodes, weights, min(2 * nlat - 1, n_even - 1))


def _split_for_hemisphere(n):
    # n = a * b with b (longitudes) / a (half latitudes) closest to 4
    best = None
    for a in range(1, int(math.isqrt(n)) + 1):
        if n % a == 0:
            for lat, lon in ((a, n // a), (n // a, a)):
                score = abs(math.log(lon / (4.0 * lat)))
                if best is None or score < best[0]:
                    best = (score, lat, lon)
    return best[1], best[2]


def hemisphere_rule(q, n):
    """An ``n``-node rule on the open upper hemisphere for even integrands.

    Folding the antipodal half of a symmetric rule onto the upper half
    doubles the weights. For q = 2 every node has u_3 > 0. For q = 1 the
    nodes are theta_k = pi k / n, which include the pole (n even) and one
    equator node at theta = 0.
    """
    _check_q(q)
    if n < 1:
        raise ValueError("need at least one node")
    if q == 1:
        theta = np.pi * np.arange(n) / n
        return SphereQuadrature(1, _circle(theta), np.full(n, 2.0 * np.pi / n), 2 * n - 1, even_only=True)
    nlat, nlon = _split_for_hemisphere(n)
    rule = gauss_jacobi_rule(2 * nlat, 2)
    upper = rule.nodes > 0
    nodes, weights = _product_nodes(rule.nodes[upper], rule.weights[upper], nlon, 2.0)
    return SphereQuadrature(2, nodes, weights, min(4 * nlat - 1, nlon - 1), even_only=True)


# ---------------------------------------------------------------- harmonics


def harmonic_dimension(q, degree):
    _check_q(q)
    if q == 1:
        return 1 if degree == 0 else 2
    return 2 * degree + 1


def harmonic_index(q, max_degree):
    """List of (degree, k) pairs, k = 1..d_degree, in storage order."""
    return [(l, k) for l in range(max_degree + 1) for k in range(1, harmonic_dimension(q, l) + 1)]


def _legendre_normalized(max_degree, z):
    """P-bar[l][m] with int_{-1}^{1} P-bar^2 dz = 1, for 0 <= m <= l."""
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    out = {}
    pmm = np.full_like(z, 1.0 / math.sqrt(2.0))
    for m in range(max_degree + 1):
        if m > 0:
            pmm = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        out[m, m] = pmm
        if m + 1 <= max_degree:
            out[m + 1, m] = math.sqrt(2.0 * m + 3.0) * z * pmm
        for l in range(m + 2, max_degree + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (z * out[l - 1, m] - b * out[l - 2, m])
    return out


def harmonics(q, max_degree, points):
    """Real orthonormal harmonics at ``points`` (shape ``(P, q+1)``), as ``(P, M)``.

    Columns follow :func:`harmonic_index`. For q = 2 the order within degree l
    is m = -l..l (sines for m < 0, cosines for m > 0).
    """
    _check_q(q)
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != q + 1:
        raise DimensionError(f"points need {q + 1} coordinates, got {points.shape[-1]}")
    if q == 1:
        theta = np.arctan2(points[..., 1], points[..., 0])
        cols = [np.full(theta.shape, 1.0 / math.sqrt(2.0 * math.pi))]
        for l in range(1, max_degree + 1):
            cols += [np.cos(l * theta) / math.sqrt(math.pi), np.sin(l * theta) / math.sqrt(math.pi)]
        return np.stack(cols, axis=-1)
    z = np.clip(points[..., 2], -1.0, 1.0)
    phi = np.arctan2(points[..., 1], points[..., 0])
    P = _legendre_normalized(max_degree, z)
    cols = []
    for l in range(max_degree + 1):
        for m in range(-l, l + 1):
            if m == 0:
                cols.append(P[l, 0] / math.sqrt(2.0 * math.pi))
            elif m > 0:
                cols.append(P[l, m] * np.cos(m * phi) / math.sqrt(math.pi))
            else:
                cols.append(P[l, -m] * np.sin(-m * phi) / math.sqrt(math.pi))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class HarmonicCoefficients:
    q: int
    max_degree: int
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(harmonic_index(self.q, self.max_degree)):
            raise DimensionError("coefficient vector does not match the harmonic index")

    @property
    def index(self):
        return harmonic_index(self.q, self.max_degree)

    @property
    def degrees(self):
        return np.array([l for l, _ in self.index])

    @property
    def entries(self):
        return dict(zip(self.index, self.values.tolist()))

    def __getitem__(self, key):
        return float(self.values[self.index.index(tuple(key))])

    def degree_mass(self, degree):
        return float(np.linalg.norm(self.values[self.degrees == degree]))

    def evaluate(self, points):
        return harmonics(self.q, self.max_degree, points) @ self.values

    def __call__(self, *u):
        return self.evaluate(np.stack(np.broadcast_arrays(*u), axis=-1))

    def scaled(self, factors_by_degree):
        return HarmonicCoefficients(self.q, self.max_degree, self.values * factors_by_degree[self.degrees])


def harmonic_coefficients(F, max_degree, rule):
    """F-hat(l, k) = integral of F Y_{l,k} by the given sphere rule."""
    if rule.even_only:
        raise PreconditionError("harmonic analysis needs a full-sphere rule")
    if rule.exactness_degree < 2 * max_degree:
        raise PreconditionError(
            f"rule exactness {rule.exactness_degree} < 2 * max_degree = {2 * max_degree}"
        )
    vals = call(F, rule.nodes)
    check_finite(vals, rule.nodes)
    Y = harmonics(rule.q, max_degree, rule.nodes)
    return HarmonicCoefficients(rule.q, max_degree, Y.T @ (rule.weights * vals))


def funk_hecke_eigenvalues(q, max_degree):
    """lambda_l with  int |u.v| Y_l(v) dmu(v) = lambda_l Y_l(u),  l = 0..max_degree.

    lambda_l = omega_{q-1} b_l / p_l(1), where b_l are the |t| coefficients.
    Odd entries are zero.
    """
    L = max_degree + (max_degree % 2)
    b = abs_kernel_coefficients(q, L)
    p1 = ultraspherical_all(L, q, 1.0)
    return (sphere_area(q - 1) * b / p1)[: max_degree + 1]


def kernel_null_degrees(q, max_degree, null_tol=1e-10):
    lam = funk_hecke_eigenvalues(q, max_degree)
    return [l for l in range(0, max_degree + 1, 2) if abs(lam[l]) < null_tol * abs(lam[0])]


def project_kernel_null(coeffs, null_tol=1e-10):
    """Split coefficients into (kept, removed, null_degrees)."""
    null = kernel_null_degrees(coeffs.q, coeffs.max_degree, null_tol)
    mask = np.isin(coeffs.degrees, null)
    kept = HarmonicCoefficients(coeffs.q, coeffs.max_degree, np.where(mask, 0.0, coeffs.values))
    removed = HarmonicCoefficients(coeffs.q, coeffs.max_degree, np.where(mask, coeffs.values, 0.0))
    return kept, removed, null


def dphi_apply(coeffs, null_tol=1e-10, odd_tol=1e-8, mass_tol=1e-8):
    """Coefficients of D_phi F: divide each even degree by its |u.v| eigenvalue."""
    odd = coeffs.degrees % 2 == 1
    if odd.any() and np.max(np.abs(coeffs.values[odd])) > odd_tol:
        raise PreconditionError("D_phi is defined for even functions; odd coefficients present")
    lam = funk_hecke_eigenvalues(coeffs.q, coeffs.max_degree)
    for l in kernel_null_degrees(coeffs.q, coeffs.max_degree, null_tol):
        mass = coeffs.degree_mass(l)
        if mass > mass_tol:
            raise KernelNullspaceError(l, mass)
    inv = np.zeros_like(lam)
    even = np.abs(lam) >= null_tol * abs(lam[0])
    even[1::2] = False
    inv[even] = 1.0 / lam[even]
    return coeffs.scaled(inv)


def kernel_apply(coeffs):
    """Coefficients of u -> int |u.v| F(v) dmu(v)."""
    return coeffs.scaled(funk_hecke_eigenvalues(coeffs.q, coeffs.max_degree))
