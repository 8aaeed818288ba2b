"""Bernstein ratio ||g||_{r,q} / ||g||_q of random-coefficient lattice nets as m grows."""

import argparse

import numpy as np

from compapprox import gaussian, rates
from compapprox.sampling import SamplePlan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--r", type=int, default=1)
    ap.add_argument("--q", type=int, default=1)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--radius", type=float, default=4.0)
    ap.add_argument("--points", type=int, default=801)
    args = ap.parse_args(argv)

    plan = SamplePlan(radius=args.radius, points_per_axis=args.points)
    ratios = []
    for m in args.m:
        grid = gaussian.grid_centers(m, args.c, args.q)
        net = gaussian.GaussianNet(args.q, grid.points, np.random.default_rng(m).normal(size=grid.count))
        ratios.append(gaussian.bernstein_ratio(net, args.r, plan))
        print(f"m={m:3d}  centers={grid.count:6d}  ratio={ratios[-1]:.4f}")
    if len(ratios) >= 3:
        fit = rates.fit_exponent(rates.ErrorCurve(tuple(args.m), tuple(ratios), "m"), tail_fraction=1.0)
        print(f"log-log slope {fit.exponent:.3f} +/- {fit.half_width:.3f}")


if __name__ == "__main__":
    main()
