"""Command line: ``compapprox run|compare|validate|catalog``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import json
import sys

from . import experiment
from .errors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="compapprox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run a sweep described by a TOML config")
    r.add_argument("config")
    r.add_argument("--output", help="override the config's output directory")
    r.add_argument("--workers", type=int, help="override the worker count")
    c = sub.add_parser("compare", help="compare a shallow and a deep run")
    c.add_argument("shallow")
    c.add_argument("deep")
    c.add_argument("--rerun", action="store_true", help="rerun even if outputs exist")
    v = sub.add_parser("validate", help="check a config (and its DAG) without running")
    v.add_argument("config")
    k = sub.add_parser("catalog", help="list registered targets")
    k.add_argument("--json", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.verb == "catalog":
            rows = experiment.catalog_listing()
            if args.json:
                print(json.dumps(rows, indent=2))
            else:
                for row in rows:
                    kind = "dag" if row["dag"] else "   "
                    print(f"{row['name']:<18} q={row['q']:<2} d={row['d']:<2} {kind} {row['description']}")
            return EXIT_OK
        if args.verb == "validate":
            cfg = experiment.load_config(args.config)
            print(f"ok: {cfg.target} / {cfg.family} / {cfg.architecture}, {len(cfg.sweep)} sweep points")
            return EXIT_OK
        if args.verb == "run":
            cfg = experiment.load_config(args.config)
            manifest = experiment.run(cfg, output=args.output, workers=args.workers)
            print(json.dumps(manifest.summary, indent=2, sort_keys=True))
            return EXIT_OK
        if args.verb == "compare":
            a = experiment.load_config(args.shallow)
            b = experiment.load_config(args.deep)
            print(json.dumps(experiment.compare(a, b, rerun=args.rerun), indent=2, sort_keys=True))
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
