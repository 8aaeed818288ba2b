"""Independent reference computations shared by the test modules."""

import numpy as np

from compapprox import sphere
from compapprox.sampling import call


def random_sphere(rng, n, q):
    v = rng.standard_normal((n, q + 1))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def y_col(q, L, l, k):
    return sphere.harmonic_index(q, L).index((l, k))


def kernel_oracle(g, u, n=40):
    # int |u.v| g(v) dmu(v) on S^2 with a rule whose pole is u, Gauss-Legendre
    # on each side of the kink t = 0 and equispaced longitudes
    x, w = np.polynomial.legendre.leggauss(n)
    t = np.concatenate([(x - 1) / 2, (x + 1) / 2])
    wt = np.concatenate([w, w]) / 2
    phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    out = []
    for ui in np.atleast_2d(u):
        a = np.linalg.svd(ui[None, :])[2][1:]  # orthonormal complement
        T, P = np.meshgrid(t, phi, indexing="ij")
        s = np.sqrt(1 - T * T)
        V = T[..., None] * ui + (s * np.cos(P))[..., None] * a[0] + (s * np.sin(P))[..., None] * a[1]
        vals = np.abs(T) * call(g, V)
        out.append(np.sum(wt[:, None] * vals) * 2 * np.pi / (2 * n))
    return np.array(out)


def random_even(q, L, degrees, seed):
    rng = np.random.default_rng(seed)
    idx = sphere.harmonic_index(q, L)
    vals = np.array([rng.normal() if l in degrees else 0.0 for l, _ in idx])
    return sphere.HarmonicCoefficients(q, L, vals)
