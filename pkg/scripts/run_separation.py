"""Run the shallow and deep binary-tree sweeps and print the exponent comparison."""

import argparse
import dataclasses
import json
from pathlib import Path

from compapprox import experiment

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shallow", default=ROOT / "configs" / "separation_shallow.toml", type=Path)
    ap.add_argument("--deep", default=ROOT / "configs" / "separation_deep.toml", type=Path)
    ap.add_argument("--out", default=None, type=Path, help="override both output directories (subdirs shallow/, deep/)")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    cfgs = []
    for name, path in (("shallow", args.shallow), ("deep", args.deep)):
        cfg = experiment.load_config(path)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output=str(args.out / name))
        experiment.run(cfg, workers=args.workers)
        cfgs.append(cfg)
    print(json.dumps(experiment.compare(*cfgs), indent=2))


if __name__ == "__main__":
    main()
