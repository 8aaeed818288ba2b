"""Gaussian networks with lattice centers.

Construction is linear in the samples of the target and needs no training:

1. Hermite coefficients f^(j), |j|_inf <= band, from a tensor Gauss-Hermite
   rule (a fixed linear functional of samples of f).
2. Each psi_j is replaced by a trapezoidal discretization of the identity

       psi_j(y) = 3^{|j|/2} (2/pi)^{q/2} int exp(-|y-w|^2) exp(-|w|^2/3) psi_j(2w/sqrt3) dw

   on the center lattice {k/m : |k/m| <= c m}^q.

The resulting coefficient tensor is a Tucker product: a core of Hermite
coefficients times one synthesis matrix per axis. :class:`LatticeGaussianNet`
keeps it in that form so 4-dimensional lattices with ~10^9 centers are still
cheap to evaluate.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial import cKDTree

from .errors import BoxTooSmallError, DimensionError, PreconditionError, SizeError, UndefinedRatioError
from .sampling import call, check_finite, open_grid
from .special import HERMITE, _hermite_recurrence, gauss_hermite_rule

DEFAULT_CAP = 10**7
TAIL_TOL = 1e-8
FD_STEP = 1e-4
# scratch-array budget (in doubles) for chunked point evaluation
_CHUNK_BUDGET = 2 * 10**7


def minimal_separation(points):
    """Smallest pairwise distance; +inf for fewer than two points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) < 2:
        return math.inf
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min())


@dataclass(frozen=True)
class CenterGrid:
    """The lattice {k/m : k integer, |k/m| <= c m}^q."""

    m: int
    c: float
    q: int
    cap: int = field(default=DEFAULT_CAP, compare=False)

    @property
    def half_count(self):
        return int(math.floor(self.c * self.m * self.m + 1e-9))

    @property
    def axis(self):
        K = self.half_count
        return np.arange(-K, K + 1) / self.m

    @property
    def spacing(self):
        return 1.0 / self.m

    @property
    def count(self):
        return (2 * self.half_count + 1) ** self.q

    @property
    def separation(self):
        return 1.0 / self.m if self.count > 1 else math.inf

    @property
    def mesh_norm(self):
        return math.sqrt(self.q) / (2.0 * self.m)

    @property
    def points(self):
        if self.count > self.cap:
            raise SizeError(self.count, self.cap)
        grids = np.meshgrid(*([self.axis] * self.q), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


def grid_centers(m, c=1.0, q=1, cap=DEFAULT_CAP):
    if m < 1 or c <= 0 or q < 1:
        raise ValueError("grid_centers needs m >= 1, c > 0, q >= 1")
    grid = CenterGrid(int(m), float(c), int(q), cap)
    if grid.count > cap:
        raise SizeError(grid.count, cap)
    return grid


@dataclass(frozen=True)
class HermiteExpansion:
    """Coefficients f^(j) for 0 <= j_i <= band, as a tensor of shape (band+1,)*q."""

    q: int
    band: int
    coefficients: np.ndarray

    def __post_init__(self):
        if self.coefficients.shape != (self.band + 1,) * self.q:
            raise DimensionError("coefficient tensor does not match (band+1,)*q")

    def __call__(self, *x):
        x = np.broadcast_arrays(*[np.asarray(xi, dtype=float) for xi in x])
        shape = x[0].shape
        T = self.coefficients
        for axis, xi in enumerate(x):
            psi = _hermite_recurrence(self.band, xi.ravel())
            if axis == 0:
                T = np.tensordot(T, psi, axes=([0], [0]))
            else:
                T = np.einsum("j...p,jp->...p", T, psi)
        return T.reshape(shape)

    def evaluate(self, points):
        return call(self, points)

    def __add__(self, other):
        return HermiteExpansion(self.q, self.band, self.coefficients + other.coefficients)

    def __mul__(self, alpha):
        return HermiteExpansion(self.q, self.band, alpha * self.coefficients)

    __rmul__ = __mul__


def mode_product(T, M, axis):
    """Multiply tensor ``T`` along ``axis`` by matrix ``M`` (new x old)."""
    return np.moveaxis(np.tensordot(M, T, axes=([1], [axis])), 0, axis)


def hermite_rule_for(band, oversample=2):
    return gauss_hermite_rule(max(band + 1, oversample * (band + 1)))


def hermite_coeffs_from_samples(f, q, band, rule=None):
    """f^(j) = int f psi_j, computed from samples of f on a tensor Gauss-Hermite grid.

    ``f`` is called once with q open-grid coordinate arrays and must broadcast.
    """
    rule = hermite_rule_for(band) if rule is None else rule
    if rule.weight_kind != HERMITE:
        raise PreconditionError("hermite_coeffs_from_samples needs a Gauss-Hermite rule")
    if rule.exactness_degree < 2 * band:
        raise PreconditionError(f"rule exactness {rule.exactness_degree} < 2 * band = {2 * band}")
    x = rule.nodes
    N = len(x)
    A = _hermite_recurrence(band, x) * rule.line_weights[None, :]
    # stream slabs along the first axis so only slab * N^(q-1) samples are live
    slab = max(1, _CHUNK_BUDGET // N ** (q - 1))
    out = None
    for start in range(0, N, slab):
        idx = slice(start, start + slab)
        coords = open_grid([x[idx]] + [x] * (q - 1))
        T = np.broadcast_to(np.asarray(f(*coords), dtype=float), (len(x[idx]),) + (N,) * (q - 1))
        if not np.all(np.isfinite(T)):
            check_finite(T, np.stack(np.broadcast_arrays(*coords), axis=-1))
        for axis in range(1, q):
            T = mode_product(T, A, axis)
        part = np.tensordot(A[:, idx], T, axes=([1], [0]))
        out = part if out is None else out + part
    T = out
    return HermiteExpansion(q, band, np.ascontiguousarray(T))


def mehler_matrix(band, grid):
    """Row j: weights of psi_j's Mehler discretization at the 1-d lattice points."""
    w = grid.axis
    psi = _hermite_recurrence(band, 2.0 * w / math.sqrt(3.0))
    scale = 3.0 ** (np.arange(band + 1) / 2.0) * math.sqrt(2.0 / math.pi)
    return scale[:, None] * grid.spacing * np.exp(-w * w / 3.0)[None, :] * psi


def mehler_tail(band, box):
    """Per-degree bound on the Mehler integrand mass outside [-box, box].

    Uses exp(-|y-w|^2) <= 1, so the bound holds for every y.
    """
    w = np.linspace(box, box + 40.0, 8001)
    psi = _hermite_recurrence(band, 2.0 * w / math.sqrt(3.0))
    scale = 3.0 ** (np.arange(band + 1) / 2.0) * math.sqrt(2.0 / math.pi)
    integrand = scale[:, None] * np.exp(-w * w / 3.0)[None, :] * np.abs(psi)
    return 2.0 * trapezoid(integrand, w, axis=1)


def check_box(band, grid, tol=TAIL_TOL):
    tails = mehler_tail(band, grid.c * grid.m)
    bad = np.flatnonzero(tails > tol)
    if len(bad):
        raise BoxTooSmallError(int(bad[0]), float(tails[bad[0]]))


def auto_box(band, m, step=0.25, tol=TAIL_TOL, max_c=64.0):
    """Smallest c (a multiple of ``step``) for which the tail check passes."""
    c = step
    while c <= max_c:
        if np.all(mehler_tail(band, c * m) <= tol):
            return c
        c += step
    raise BoxTooSmallError(band, math.inf)


@dataclass(frozen=True)
class GaussianNet:
    """x -> sum_k a_k exp(-|x - x_k|^2) with explicit centers."""

    q: int
    centers: np.ndarray
    coefficients: np.ndarray
    minimal_separation: float = None

    def __post_init__(self):
        if self.centers.shape != (len(self.coefficients), self.q):
            raise DimensionError("centers must have shape (n, q)")
        if self.minimal_separation is None:
            object.__setattr__(self, "minimal_separation", minimal_separation(self.centers))

    def __len__(self):
        return len(self.coefficients)

    def evaluate(self, points):
        x = np.asarray(points, dtype=float)
        if x.shape[-1:] != (self.q,):
            raise DimensionError(f"expected {self.q} coordinates, got shape {x.shape}")
        flat = x.reshape(-1, self.q)
        out = np.empty(len(flat))
        step = max(1, _CHUNK_BUDGET // max(1, len(self.coefficients)))
        for s in range(0, len(flat), step):
            chunk = flat[s : s + step]
            d2 = (
                np.sum(chunk**2, axis=1)[:, None]
                - 2.0 * chunk @ self.centers.T
                + np.sum(self.centers**2, axis=1)[None, :]
            )
            out[s : s + step] = np.exp(-np.maximum(d2, 0.0)) @ self.coefficients
        return out.reshape(x.shape[:-1])

    def __call__(self, *x):
        return self.evaluate(np.stack(np.broadcast_arrays(*x), axis=-1))


@dataclass(frozen=True)
class LatticeGaussianNet:
    """Gaussian net on a CenterGrid with Tucker-factored coefficients.

    The coefficient of center (w_{k_1}, ..., w_{k_q}) is
    sum_j core[j] prod_i factor[j_i, k_i].
    """

    grid: CenterGrid
    core: np.ndarray
    factor: np.ndarray

    @property
    def q(self):
        return self.grid.q

    @property
    def minimal_separation(self):
        return self.grid.separation

    def __len__(self):
        return self.grid.count

    @property
    def coefficients(self):
        if self.grid.count > self.grid.cap:
            raise SizeError(self.grid.count, self.grid.cap)
        T = self.core
        for axis in range(self.q):
            T = mode_product(T, self.factor.T, axis)
        return T

    def to_dense(self):
        return GaussianNet(self.q, self.grid.points, self.coefficients.ravel(), self.grid.separation)

    def _axis_response(self, y):
        # (P, J): exp(-(y - w)^2) summed against each Mehler row
        w = self.grid.axis
        return np.exp(-(y[:, None] - w[None, :]) ** 2) @ self.factor.T

    def evaluate_grid(self, axes):
        """Values on the tensor grid axes[0] x ... x axes[q-1]."""
        T = self.core
        for axis, y in enumerate(axes):
            T = mode_product(T, self._axis_response(np.asarray(y, dtype=float)), axis)
        return T

    def evaluate(self, points):
        x = np.asarray(points, dtype=float)
        if x.shape[-1:] != (self.q,):
            raise DimensionError(f"expected {self.q} coordinates, got shape {x.shape}")
        flat = x.reshape(-1, self.q)
        J = self.core.shape[0]
        step = max(1, _CHUNK_BUDGET // (len(self.grid.axis) + J ** max(self.q - 1, 1)))
        out = np.empty(len(flat))
        for s in range(0, len(flat), step):
            chunk = flat[s : s + step]
            R = [self._axis_response(chunk[:, i]) for i in range(self.q)]
            T = R[0] @ self.core.reshape(J, -1)
            for i in range(1, self.q):
                T = np.einsum("pj,pj...->p...", R[i], T.reshape((len(chunk), J) + (J,) * (self.q - 1 - i)))
            out[s : s + step] = T.reshape(len(chunk))
        return out.reshape(x.shape[:-1])

    def __call__(self, *x):
        return self.evaluate(np.stack(np.broadcast_arrays(*x), axis=-1))


def synthesize_from_hermite(expansion, grid, tail_tol=TAIL_TOL):
    if grid.q != expansion.q:
        raise DimensionError("expansion and grid dimensions differ")
    check_box(expansion.band, grid, tail_tol)
    return LatticeGaussianNet(grid, expansion.coefficients, mehler_matrix(expansion.band, grid))


def default_band(m, beta=0.5):
    return max(0, int(math.ceil(beta * m * m - 1e-9)))


def approximate(f, q, m, beta=0.5, c=None, oversample=2, band=None, cap=DEFAULT_CAP):
    """Gaussian lattice net for f on R^q with centers of separation 1/m.

    ``band`` defaults to ceil(beta m^2). ``c=None`` picks the smallest box
    that passes the Mehler tail check for that band.
    """
    band = default_band(m, beta) if band is None else int(band)
    expansion = hermite_coeffs_from_samples(f, q, band, hermite_rule_for(band, oversample))
    c = auto_box(band, m) if c is None else c
    # the lattice is never materialized, so the cap only guards dense export
    grid = CenterGrid(int(m), float(c), int(q), cap)
    return synthesize_from_hermite(expansion, grid)


def _weighted_shift_values(net, x, axis_steps):
    # exp(-|x|^2) exp(|x+s|^2) g(x+s) = exp(2 x.s + |s|^2) g(x+s)
    s = np.asarray(axis_steps, dtype=float)
    return np.exp(2.0 * x @ s + s @ s) * net.evaluate(x + s)


def weighted_derivative_sups(net, order, points, step=FD_STEP):
    """sup |exp(-|x|^2) D^k (exp(|x|^2) g)| at ``points`` for each |k| = order.

    Central differences of exp(|x|^2) g are formed after multiplying through
    by exp(-|x|^2), which turns each shifted sample into
    exp(2 x.s + |s|^2) g(x + s) and avoids overflow.
    """
    sups = []
    for k in _multi_indices(net.q, order):
        acc = np.zeros(len(points))
        stencils = [[(t, (-1) ** t * math.comb(ki, t)) for t in range(ki + 1)] for ki in k]
        for combo in _product(stencils):
            shift = np.array([(ki / 2.0 - t) * step for (t, _), ki in zip(combo, k)])
            weight = np.prod([c for _, c in combo])
            acc += weight * _weighted_shift_values(net, points, shift)
        sups.append(float(np.max(np.abs(acc))) / step**order)
    return sups


def _multi_indices(q, order):
    if q == 1:
        yield (order,)
        return
    for first in range(order + 1):
        for rest in _multi_indices(q - 1, order - first):
            yield (first,) + rest


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


def bernstein_ratio(net, r, plan, step=FD_STEP):
    """||g||_{r,q} / ||g||_q on the plan's sample points.

    ||g||_{r,q} = ||g|| + sum over 1 <= |k|_1 <= r of
    ||exp(-|x|^2) D^k (exp(|x|^2) g)||, all sup-norms estimated on samples.
    """
    pts = plan.points(net.q)
    base = float(np.max(np.abs(net.evaluate(pts))))
    if base == 0.0:
        raise UndefinedRatioError("bernstein ratio of a zero net")
    total = base
    for order in range(1, r + 1):
        total += sum(weighted_derivative_sups(net, order, pts, step))
    return total / base


def least_squares_fit(f, grid, points, rcond=None):
    """Baseline only: Gaussian net on ``grid`` fitted to samples by least squares."""
    centers = grid.points
    x = np.asarray(points, dtype=float)
    d2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    a = np.linalg.lstsq(np.exp(-d2), call(f, x), rcond=rcond)[0]
    return GaussianNet(grid.q, centers, a, grid.separation)
