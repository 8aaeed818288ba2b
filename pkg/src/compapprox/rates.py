"""Power-law fits of error curves, relative dimension, and exact parameter counts."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import stats

from .errors import (
    DomainError,
    ExactRepresentationError,
    InsufficientDataError,
    StepError,
    UndefinedRatioError,
)

PROXY_CAVEAT = (
    "errors are constructive-error proxies measured on sampled points; "
    "they upper-bound width-type quantities only heuristically"
)


class NonConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ErrorCurve:
    complexity: tuple
    errors: tuple
    axis_label: str = "n"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.complexity, dtype=float)
        e = np.asarray(self.errors, dtype=float)
        if c.shape != e.shape or c.ndim != 1:
            raise ValueError("complexity and errors must be 1-d of equal length")
        if np.any(np.diff(c) <= 0):
            raise ValueError("complexity must be strictly increasing")
        if np.any(~(e > 0)) or not np.all(np.isfinite(e)):
            raise ValueError("errors must be positive and finite")

    def __len__(self):
        return len(self.errors)


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    residual: float
    half_width: float
    points: int


def _tail_count(n, tail_fraction):
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    return min(n, max(3, math.ceil(tail_fraction * n)))


def fit_exponent(curve, tail_fraction=0.5, confidence=0.95):
    """Least-squares slope of log error against log complexity over the tail.

    The tail holds the last max(3, ceil(tail_fraction * N)) points. The
    half-width is the Student-t confidence half-width of the slope; the
    residual is the RMS of the log-space residuals.
    """
    n = len(curve)
    if n < 3:
        raise InsufficientDataError(f"need at least 3 points to fit, got {n}")
    k = _tail_count(n, tail_fraction)
    x = np.log(np.asarray(curve.complexity[-k:], dtype=float))
    y = np.log(np.asarray(curve.errors[-k:], dtype=float))
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    rms = float(np.sqrt(np.mean(resid**2)))
    if k > 2:
        half = float(stats.t.ppf(0.5 + confidence / 2, k - 2) * res.stderr)
    else:
        half = math.inf
    return RateFit(float(res.slope), float(res.intercept), rms, half, k)


def relative_dimension(curve_V, curve_W, tail_fraction=0.5, max_half_width=0.2, check=True):
    """fit(W).exponent / fit(V).exponent, the finite-n stand-in for D(V, W)."""
    fv = fit_exponent(curve_V, tail_fraction)
    fw = fit_exponent(curve_W, tail_fraction)
    if check and (fv.half_width >= max_half_width or fw.half_width >= max_half_width):
        raise InsufficientDataError(
            f"fit half-widths {fv.half_width:.3g}, {fw.half_width:.3g} not below {max_half_width}"
        )
    if abs(fv.exponent) < 1e-12:
        raise UndefinedRatioError("denominator exponent is zero")
    return fw.exponent / fv.exponent


def is_parsimonious(rel_dim, threshold=0.1):
    return abs(rel_dim) < threshold


def smoothness_estimate(curve, tail_fraction=0.5):
    """gamma-hat = -slope of log error against log m."""
    gamma = -fit_exponent(curve, tail_fraction).exponent
    if gamma <= 0:
        warnings.warn("errors do not decrease with m; no convergence observed", NonConvergenceWarning)
    return gamma


def param_count_binary_tree(q, n):
    """(q-1)(q+2)n for a binary tree on q inputs with n units per node."""
    q, n = int(q), int(n)
    if q < 2 or q & (q - 1):
        raise DomainError(f"q must be a power of 2 (>= 2), got {q}")
    return (q - 1) * (q + 2) * n


def param_count_dense_poly(q, total_degree):
    """Number of monomials of total degree <= total_degree in q variables."""
    return math.comb(int(q) + int(total_degree), int(q))


def param_count_compositional_poly(arities, degree):
    """Coefficients of per-node polynomials of total degree <= degree."""
    return sum(math.comb(d + degree, d) for d in arities)


def build_error_curve(approximator, error_metric, complexities, axis_label="m", metadata=None):
    """Run ``approximator(c)`` and ``error_metric(net)`` for each complexity."""
    xs, errs = [], []
    for i, c in enumerate(complexities):
        try:
            net = approximator(c)
            err = float(error_metric(net))
        except Exception as exc:
            raise StepError(f"sweep point {i} (complexity {c})", exc) from exc
        xs.append(c)
        errs.append(err)
    if all(e == 0 for e in errs):
        raise ExactRepresentationError("target is represented exactly at every complexity")
    return ErrorCurve(tuple(xs), tuple(errs), axis_label, dict(metadata or {}))


def reference_exponents(gamma, q, d):
    """The gamma/(2q) and gamma/(2d) width exponents for shallow and deep classes."""
    return {"shallow": -gamma / (2.0 * q), "deep": -gamma / (2.0 * d), "relative_dimension": d / q}
