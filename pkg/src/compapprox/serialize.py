"""Network records: plain dicts that survive a JSON round trip bit-exactly.

Python's json module writes floats with repr, which round-trips every
finite double. Lattice Gaussian nets are stored in factored form (grid
parameters plus the core); the synthesis factor is recomputed on load.
"""

import json

import numpy as np

from .dag import DagSpec, DeepNet
from .errors import ConfigError
from .gaussian import CenterGrid, GaussianNet, LatticeGaussianNet, mehler_matrix
from .relu import EuclidReluNet, ZonalReluNet


def _flat(a):
    return None if a is None else np.asarray(a, dtype=float).ravel().tolist()


def _matrix(values, shape):
    return None if values is None else np.asarray(values, dtype=float).reshape(shape)


def net_to_record(net):
    if isinstance(net, GaussianNet):
        return {
            "family": "gaussian",
            "form": "dense",
            "q": net.q,
            "centers": _flat(net.centers),
            "coefficients": _flat(net.coefficients),
            "correction": None,
            "minimal_separation": net.minimal_separation,
        }
    if isinstance(net, LatticeGaussianNet):
        g = net.grid
        return {
            "family": "gaussian",
            "form": "lattice",
            "q": g.q,
            "centers": {"m": g.m, "c": g.c, "count": g.count},
            "band": net.core.shape[0] - 1,
            "coefficients": _flat(net.core),
            "correction": None,
            "minimal_separation": net.minimal_separation,
        }
    if isinstance(net, EuclidReluNet):
        return {
            "family": "relu",
            "form": "euclidean",
            "q": net.q,
            "anchors": _flat(net.anchors),
            "coefficients": _flat(net.coefficients),
            "biases": _flat(net.biases),
            "correction": _flat(net.correction),
        }
    if isinstance(net, ZonalReluNet):
        return {
            "family": "relu",
            "form": "zonal",
            "q": net.q,
            "anchors": _flat(net.directions),
            "coefficients": _flat(net.coefficients),
            "correction": _flat(net.correction),
        }
    if isinstance(net, DeepNet):
        return {
            "family": "deep",
            "form": "dag",
            "q": net.dag.q,
            "inputs": list(net.dag.inputs),
            "nodes": {v: list(args) for v, args in net.dag.nodes.items()},
            "nets": {v: net_to_record(n) for v, n in net.node_nets.items()},
            "node_errors": dict(net.node_errors),
        }
    raise TypeError(f"cannot serialize {type(net).__name__}")


def record_to_net(rec):
    family, form, q = rec.get("family"), rec.get("form"), rec.get("q")
    if family == "gaussian" and form == "dense":
        coeffs = np.asarray(rec["coefficients"], dtype=float)
        return GaussianNet(q, _matrix(rec["centers"], (len(coeffs), q)), coeffs, rec["minimal_separation"])
    if family == "gaussian" and form == "lattice":
        c = rec["centers"]
        grid = CenterGrid(c["m"], c["c"], q)
        band = rec["band"]
        core = np.asarray(rec["coefficients"], dtype=float).reshape((band + 1,) * q)
        return LatticeGaussianNet(grid, core, mehler_matrix(band, grid))
    if family == "relu":
        coeffs = np.asarray(rec["coefficients"], dtype=float)
        corr = _matrix(rec.get("correction"), (q + 1, q + 1))
        if form == "euclidean":
            biases = rec.get("biases")
            return EuclidReluNet(
                q,
                coeffs,
                _matrix(rec["anchors"], (len(coeffs), q)),
                corr,
                None if biases is None else np.asarray(biases, dtype=float),
            )
        if form == "zonal":
            return ZonalReluNet(q, coeffs, _matrix(rec["anchors"], (len(coeffs), q + 1)), corr)
    if family == "deep":
        dag = DagSpec(tuple(rec["inputs"]), {v: tuple(a) for v, a in rec["nodes"].items()})
        nets = {v: record_to_net(r) for v, r in rec["nets"].items()}
        return DeepNet(dag, nets, dict(rec.get("node_errors", {})))
    raise ConfigError(f"unrecognized net record (family={family!r}, form={form!r})")


def dumps(net):
    return json.dumps(net_to_record(net), sort_keys=True) + "\n"


def loads(text):
    return record_to_net(json.loads(text))
