"""Sup error of construct_zonal_approx on a random band-limited even sphere function."""

import argparse

import numpy as np

from compapprox import relu, sphere


def random_even(q, L, degrees, seed):
    rng = np.random.default_rng(seed)
    idx = sphere.harmonic_index(q, L)
    return sphere.HarmonicCoefficients(q, L, np.array([rng.normal() if l in degrees else 0.0 for l, _ in idx]))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=int, default=1, choices=[1, 2])
    ap.add_argument("--degrees", type=int, nargs="+", default=[0, 4, 6])
    ap.add_argument("--n", type=int, nargs="+", default=[125, 250, 500, 1000])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    L = max(args.degrees)
    F = random_even(args.q, L, set(args.degrees), args.seed)
    for n in args.n:
        net = relu.construct_zonal_approx(F, args.q, n, max_degree=L)
        print(f"n={n:5d}  terms={len(net):5d}  sup error={relu.sup_error_on_sphere(F, net, args.q):.3e}")


if __name__ == "__main__":
    main()
