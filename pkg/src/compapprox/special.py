"""Hermite functions, ultraspherical polynomials and their Gauss rules.

Everything here works on numpy arrays and returns fresh arrays; nothing is
cached or mutated, so the functions are safe to call from several threads.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import DimensionError, DomainError, UnsupportedDegreeError, UnsupportedSizeError

MAX_DEGREE = 200
MAX_NODES = 256

HERMITE = "hermite"
JACOBI = "jacobi"
UNIFORM = "uniform"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for one of the three weights we use.

    ``weight_kind`` is ``"hermite"`` (exp(-x^2) on the line), ``"jacobi"``
    ((1-t^2)^(q/2-1) on [-1, 1], with ``q`` recorded) or ``"uniform"``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    weight_kind: str
    q: int = 0

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))

    @property
    def line_weights(self):
        """Weights for plain dx integrals, i.e. w_k exp(x_k^2).

        These are computed from the Christoffel sums of the Hermite functions,
        which stay finite where exp(x_k^2) would overflow.
        """
        if self.weight_kind != HERMITE:
            raise ValueError("line weights only exist for the Hermite rule")
        psi = _hermite_recurrence(len(self.nodes) - 1, self.nodes)
        return 1.0 / np.sum(psi * psi, axis=0)


def _check_degree(degree):
    if degree < 0 or degree > MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"degree {degree} outside the supported range 0..{MAX_DEGREE}"
        )


def hermite_functions(max_degree, x):
    """All orthonormal Hermite functions psi_0..psi_max_degree at ``x``.

    Runs the three-term recurrence on psi_j itself (Gaussian factor
    included), so nothing overflows for the degrees we allow. Result has
    shape ``(max_degree + 1,) + x.shape``.
    """
    _check_degree(max_degree)
    return _hermite_recurrence(max_degree, x)


def _hermite_recurrence(max_degree, x):
    x = np.asarray(x, dtype=float)
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if max_degree >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for j in range(2, max_degree + 1):
        out[j] = math.sqrt(2.0 / j) * x * out[j - 1] - math.sqrt((j - 1) / j) * out[j - 2]
    return out


def hermite_eval(degree, point):
    """psi_degree(point); ``point`` may be a scalar or an array."""
    values = hermite_functions(degree, point)[degree]
    return float(values) if values.ndim == 0 else values


def hermite_multi_eval(multi_index, point):
    """Product of univariate Hermite functions, one per coordinate.

    ``point`` may carry leading batch axes: shape ``(..., q)``.
    """
    multi_index = tuple(int(j) for j in multi_index)
    point = np.asarray(point, dtype=float)
    if len(multi_index) < 1 or point.shape[-1:] != (len(multi_index),):
        raise DimensionError(
            f"multi-index of length {len(multi_index)} against point of shape {point.shape}"
        )
    value = np.ones(point.shape[:-1])
    for axis, j in enumerate(multi_index):
        value = value * hermite_functions(j, point[..., axis])[j]
    return float(value) if value.ndim == 0 else value


def gauss_hermite_rule(node_count):
    """Gauss rule for the weight exp(-x^2), exact to degree 2n - 1."""
    n = int(node_count)
    if n < 1 or n > MAX_NODES:
        raise UnsupportedSizeError(f"node count {n} outside 1..{MAX_NODES}")
    if n == 1:
        x = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, n) / 2.0)
        x = eigh_tridiagonal(np.zeros(n), off, eigvals_only=True)
        # polish on psi_n: psi_n' = sqrt(2n) psi_{n-1} - x psi_n
        for _ in range(3):
            psi = _hermite_recurrence(n, x)
            dx = psi[n] / (math.sqrt(2.0 * n) * psi[n - 1] - x * psi[n])
            x = x - dx
        x = 0.5 * (x - x[::-1])  # exact symmetry
    psi = _hermite_recurrence(n - 1, x)
    weights = np.exp(-x * x) / np.sum(psi * psi, axis=0)
    return QuadratureRule(x, weights, 2 * n - 1, HERMITE)


def _jacobi_param(q):
    if q < 1:
        raise DomainError(f"dimension parameter q must be >= 1, got {q}")
    return 0.5 * q - 1.0


def _ultra_mass(a):
    """Integral of (1 - t^2)^a over [-1, 1]."""
    return math.exp(0.5 * math.log(math.pi) + gammaln(a + 1.0) - gammaln(a + 1.5))


def _ultra_beta(n, a):
    # monic recurrence coefficient; n = 1 written separately so q = 1 has no 0/0
    if n == 1:
        return 1.0 / (2.0 * a + 3.0)
    return n * (n + 2.0 * a) / ((2.0 * n + 2.0 * a + 1.0) * (2.0 * n + 2.0 * a - 1.0))


def _ultra_recurrence(max_degree, q, t, with_derivative=False):
    a = _jacobi_param(q)
    t = np.asarray(t, dtype=float)
    p = np.empty((max_degree + 1,) + t.shape)
    dp = np.empty_like(p) if with_derivative else None
    p[0] = 1.0 / math.sqrt(_ultra_mass(a))
    if with_derivative:
        dp[0] = 0.0
    if max_degree >= 1:
        sb = math.sqrt(_ultra_beta(1, a))
        p[1] = t * p[0] / sb
        if with_derivative:
            dp[1] = p[0] / sb
    for n in range(1, max_degree):
        sb_n = math.sqrt(_ultra_beta(n, a))
        sb_next = math.sqrt(_ultra_beta(n + 1, a))
        p[n + 1] = (t * p[n] - sb_n * p[n - 1]) / sb_next
        if with_derivative:
            dp[n + 1] = (p[n] + t * dp[n] - sb_n * dp[n - 1]) / sb_next
    return (p, dp) if with_derivative else p


def ultraspherical_all(max_degree, q, t):
    """Orthonormal p_0..p_max_degree for the weight (1-t^2)^(q/2-1).

    The leading coefficients are positive. Shape
    ``(max_degree + 1,) + t.shape``.
    """
    _check_degree(max_degree)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0):
        raise DomainError("ultraspherical polynomials are evaluated on [-1, 1] only")
    return _ultra_recurrence(max_degree, q, t)


def ultraspherical_eval(degree, q, point):
    values = ultraspherical_all(degree, q, point)[degree]
    return float(values) if values.ndim == 0 else values


def gauss_jacobi_rule(node_count, q):
    """Gauss rule on [-1, 1] for the weight (1-t^2)^(q/2-1).

    Nodes come from Newton iteration on p_n, started from the
    Chebyshev-type guesses cos(pi (k - 1/4 + a/2) / (n + 1/2 + a)); these are
    exact for q = 1 and q = 3 and close otherwise.
    """
    n = int(node_count)
    if n < 1 or n > MAX_NODES:
        raise UnsupportedSizeError(f"node count {n} outside 1..{MAX_NODES}")
    a = _jacobi_param(q)
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25 + 0.5 * a) / (n + 0.5 + a))
    for _ in range(100):
        p, dp = _ultra_recurrence(n, q, x, with_derivative=True)
        dx = p[n] / dp[n]
        x = x - dx
        if np.max(np.abs(dx)) < 1e-14:
            break
    x = np.sort(0.5 * (x - x[::-1]))
    if n > 1 and np.any(np.diff(x) <= 0):
        raise RuntimeError(f"Newton iteration for {n} Gauss-Jacobi nodes collapsed")
    p = _ultra_recurrence(n - 1, q, x)
    weights = 1.0 / np.sum(p * p, axis=0)
    return QuadratureRule(x, weights, 2 * n - 1, JACOBI, q=q)


def _gauss_jacobi_general(n, alpha, beta):
    """Golub-Welsch rule for (1-x)^alpha (1+x)^beta on [-1, 1]."""
    k = np.arange(n, dtype=float)
    s = 2.0 * k + alpha + beta
    diag = np.empty(n)
    diag[0] = (beta - alpha) / (alpha + beta + 2.0)
    diag[1:] = (beta**2 - alpha**2) / (s[1:] * (s[1:] + 2.0))
    k1 = np.arange(1, n, dtype=float)
    s1 = 2.0 * k1 + alpha + beta
    off = np.sqrt(
        4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + alpha + beta)
        / (s1**2 * (s1 + 1.0) * (s1 - 1.0))
    )
    x, vec = eigh_tridiagonal(diag, off)
    mass = math.exp(
        (alpha + beta + 1.0) * math.log(2.0)
        + gammaln(alpha + 1.0) + gammaln(beta + 1.0) - gammaln(alpha + beta + 2.0)
    )
    return x, mass * vec[0] ** 2


def abs_kernel_coefficients(q, max_even_degree, node_count=None):
    """Coefficients b_l of |t| against the orthonormal p_l, l = 0..max_even_degree.

    b_l = int_{-1}^{1} |t| p_l(t) (1-t^2)^(q/2-1) dt. Odd entries are zero.
    For even l the substitution s = t^2 turns the integrand into a polynomial
    of degree l/2 against (1-s)^(q/2-1) on [0, 1], which a Gauss-Jacobi rule
    integrates exactly.
    """
    L = int(max_even_degree)
    if L < 0 or L % 2 or L > MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"max_even_degree must be even and in 0..{MAX_DEGREE}, got {max_even_degree}"
        )
    a = _jacobi_param(q)
    n = node_count if node_count is not None else L // 2 + 8
    x, w = _gauss_jacobi_general(n, a, 0.0)
    s = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-a - 1.0)
    p = ultraspherical_all(L, q, np.sqrt(s))
    b = p @ w
    b[1::2] = 0.0
    return b


def sphere_area(q):
    """Surface measure omega_q of the unit sphere S^q in R^(q+1)."""
    return 2.0 * math.pi ** (0.5 * (q + 1)) / math.gamma(0.5 * (q + 1))
