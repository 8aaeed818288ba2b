"""Sample plans for sup-type norms, and the calling convention for targets.

Every multivariate function in this package takes its coordinates as separate
positional arguments, ``f(x1, ..., xq)``, each a broadcastable array. That way
tensor grids can be passed as open (sparse) grids instead of being
materialized. :func:`call` adapts a stacked ``(..., q)`` array to that form.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

from .errors import NonFiniteError, SizeError

MAX_SAMPLES = 2_000_000


def call(f, points):
    """Evaluate ``f`` at an array of points of shape ``(..., q)``."""
    points = np.asarray(points, dtype=float)
    return np.asarray(f(*np.moveaxis(points, -1, 0)), dtype=float)


def open_grid(axes):
    """Broadcastable coordinate arrays for the tensor product of ``axes``."""
    q = len(axes)
    out = []
    for i, ax in enumerate(axes):
        shape = [1] * q
        shape[i] = len(ax)
        out.append(np.asarray(ax, dtype=float).reshape(shape))
    return out


def check_finite(values, points):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.flatnonzero(bad.ravel())[0]
        raise NonFiniteError(points.reshape(-1, points.shape[-1])[idx], values.ravel()[idx])


@dataclass(frozen=True)
class SamplePlan:
    """A lattice on [-radius, radius]^q plus optional radial tail probes.

    Tail probes sit at each radius in ``tail_radii`` along the signed
    coordinate axes and ``tail_directions`` seeded random directions.
    Sup-norms estimated from a plan are lower estimates of the true
    (essential) supremum.
    """

    radius: float = 3.0
    points_per_axis: int = 13
    tail_radii: tuple = ()
    tail_directions: int = 16
    seed: int = 0
    max_samples: int = field(default=MAX_SAMPLES, compare=False)

    def axes(self, q):
        ax = np.linspace(-self.radius, self.radius, self.points_per_axis)
        return [ax] * q

    def lattice(self, q):
        count = self.points_per_axis**q
        if count > self.max_samples:
            raise SizeError(count, self.max_samples)
        grids = np.meshgrid(*self.axes(q), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def tail_points(self, q):
        if not self.tail_radii:
            return np.empty((0, q))
        eye = np.eye(q)
        dirs = [eye, -eye]
        if self.tail_directions:
            rng = np.random.default_rng(self.seed)
            r = rng.standard_normal((self.tail_directions, q))
            dirs.append(r / np.linalg.norm(r, axis=1, keepdims=True))
        dirs = np.concatenate(dirs)
        return np.concatenate([rad * dirs for rad in self.tail_radii])

    def points(self, q):
        return np.concatenate([self.lattice(q), self.tail_points(q)])


def box_lattice(lower, upper, points_per_axis):
    """Lattice points on an axis-aligned box given by per-axis bounds."""
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(lower, upper)]
    count = points_per_axis ** len(axes)
    if count > MAX_SAMPLES:
        raise SizeError(count, MAX_SAMPLES)
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(axes))
