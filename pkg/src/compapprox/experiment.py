"""Config-driven sweeps: build nets over a complexity sweep, measure, fit, persist.

Outputs in the run directory:

    curve.csv      complexity,error,wall_ms,warning  (17 significant digits, LF)
    nets/NN.json   one serialized net per successful sweep point
    summary.json   fitted rate; no paths or timings, so reruns are byte-identical
    manifest.json  config hash, version, timings, warnings, sha256 of every file
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import hashlib
import io
import json
import math
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__, catalog, gaussian, relu, serialize
from .dag import DagSpec, GFunction, deep_approximate, validate_dag
from .errors import ConfigError
from .rates import PROXY_CAVEAT, ErrorCurve, fit_exponent, relative_dimension
from .sampling import SamplePlan, open_grid
from .sphere import lift_function, weighted_norm

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FAMILIES = ("gaussian", "relu-zonal", "least-squares-baseline")
ARCHITECTURES = ("shallow", "deep")
METRICS = ("sup-on-box", "weighted-sup")
AXES = ("m", "units")


@dataclass(frozen=True)
class GaussianOptions:
    beta: float = 0.5
    c: float = None  # None: smallest box passing the Mehler tail check
    oversample: int = 2


@dataclass(frozen=True)
class ReluOptions:
    max_degree: int = None
    null_tol: float = 1e-10
    delta_pole: float = 1e-6


@dataclass(frozen=True)
class ProbeOptions:
    radius: float = 3.0
    points_per_axis: int = 13
    tail_radii: tuple = ()
    random_points: int = 0  # > 0: seeded uniform points instead of the lattice


@dataclass(frozen=True)
class ExperimentConfig:
    target: str
    family: str
    sweep: tuple
    name: str = ""
    architecture: str = "shallow"
    seed: int = 0
    metric: str = "sup-on-box"
    output: str = "runs/out"
    workers: int = 1
    complexity_axis: str = "m"
    tail_fraction: float = 0.5
    record_timing: bool = False
    save_nets: bool = True
    gaussian: GaussianOptions = field(default_factory=GaussianOptions)
    relu: ReluOptions = field(default_factory=ReluOptions)
    probe: ProbeOptions = field(default_factory=ProbeOptions)
    dag: dict = None

    def canonical(self):
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _section(cls, raw, name):
    raw = dict(raw or {})
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    if "tail_radii" in raw:
        raw["tail_radii"] = tuple(raw["tail_radii"])
    return cls(**raw)


def config_from_dict(raw):
    raw = dict(raw)
    for key in ("target", "family", "sweep"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    sections = {
        "gaussian": _section(GaussianOptions, raw.pop("gaussian", None), "gaussian"),
        "relu": _section(ReluOptions, raw.pop("relu", None), "relu"),
        "probe": _section(ProbeOptions, raw.pop("probe", None), "probe"),
    }
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    raw["sweep"] = tuple(raw["sweep"])
    try:
        cfg = ExperimentConfig(**raw, **sections)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    validate_config(cfg)
    return cfg


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def validate_config(cfg):
    if not cfg.sweep:
        raise ConfigError("sweep is empty")
    if any(not isinstance(s, int) or s < 1 for s in cfg.sweep):
        raise ConfigError("sweep entries must be positive integers")
    if any(b <= a for a, b in zip(cfg.sweep, cfg.sweep[1:])):
        raise ConfigError("sweep must be strictly increasing")
    if cfg.family not in FAMILIES:
        raise ConfigError(f"unknown family {cfg.family!r}; expected one of {FAMILIES}")
    if cfg.architecture not in ARCHITECTURES:
        raise ConfigError(f"unknown architecture {cfg.architecture!r}")
    if cfg.metric not in METRICS:
        raise ConfigError(f"unknown metric {cfg.metric!r}; expected one of {METRICS}")
    if cfg.complexity_axis not in AXES:
        raise ConfigError(f"unknown complexity_axis {cfg.complexity_axis!r}")
    if not 0 < cfg.tail_fraction <= 1:
        raise ConfigError("tail_fraction must lie in (0, 1]")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must fit in 64 bits")
    target = resolve_target(cfg)
    if cfg.architecture == "deep":
        if target.gfunction is None:
            raise ConfigError(f"deep runs need a DAG target; {cfg.target!r} is plain")
        if cfg.family == "least-squares-baseline":
            raise ConfigError("the least-squares baseline is shallow only")
        report = validate_dag(target.gfunction.dag)
        if not report.valid:
            raise ConfigError("invalid DAG: " + "; ".join(report.violations))
    if cfg.family == "relu-zonal":
        dims = [target.q] if cfg.architecture == "shallow" else [target.gfunction.dag.d]
        if max(dims) > 2:
            raise ConfigError("relu-zonal construction supports input dimension 1 or 2 only")
    return cfg


def dag_from_dict(raw):
    """Build a GFunction from a [dag] config section.

    [dag]
    inputs = ["x1", "x2"]
    [dag.nodes.h1]
    args = ["x1", "x2"]
    arity = 2
    constituent = "bump_product"
    lipschitz = 2.0        # optional
    """
    try:
        inputs = tuple(raw["inputs"])
        node_defs = raw["nodes"]
    except KeyError as exc:
        raise ConfigError(f"[dag] needs {exc.args[0]!r}") from None
    nodes, arities, cons, lips = {}, {}, {}, {}
    for v, spec in node_defs.items():
        nodes[v] = tuple(spec.get("args", ()))
        arities[v] = spec.get("arity", len(nodes[v]))
        cons[v] = catalog.get_constituent(spec.get("constituent", ""), arities[v])
        if "lipschitz" in spec:
            lips[v] = float(spec["lipschitz"])
    dag = DagSpec(inputs, nodes, arities)
    return GFunction(dag, cons, lips or None)


def resolve_target(cfg):
    if cfg.dag is not None:
        gf = dag_from_dict(cfg.dag)
        return catalog.Target(cfg.target, gf.dag.q, gf, "config-defined G-function", gfunction=gf)
    return catalog.get_target(cfg.target)


def probe_plan(cfg):
    p = cfg.probe
    return SamplePlan(p.radius, p.points_per_axis, tuple(p.tail_radii), seed=cfg.seed)


def probe_points(cfg, q):
    p = cfg.probe
    if p.random_points > 0:
        rng = np.random.default_rng(cfg.seed)
        return rng.uniform(-p.radius, p.radius, size=(p.random_points, q))
    return probe_plan(cfg).points(q)


def _gaussian_kwargs(cfg):
    g = cfg.gaussian
    return {"beta": g.beta, "c": g.c, "oversample": g.oversample}


def build_net(cfg, target, complexity):
    """One sweep point. Returns (net, warnings)."""
    warns = []
    if cfg.architecture == "deep":
        if cfg.family == "gaussian":
            opts = _gaussian_kwargs(cfg)
        else:
            opts = {"max_degree": cfg.relu.max_degree, "null_tol": cfg.relu.null_tol}
        rng = np.random.default_rng(cfg.seed)
        probe = rng.uniform(-cfg.probe.radius, cfg.probe.radius, size=(4096, target.q))
        return deep_approximate(target.gfunction, cfg.family, complexity, probe_points=probe, **opts), warns
    if cfg.family == "gaussian":
        return gaussian.approximate(target, target.q, complexity, **_gaussian_kwargs(cfg)), warns
    if cfg.family == "relu-zonal":
        zonal = relu.construct_zonal_approx(
            lift_function(target, target.q),
            target.q,
            complexity,
            cfg.relu.max_degree,
            null_tol=cfg.relu.null_tol,
        )
        if zonal.correction is not None:
            warns.append("kernel-null degree carried by the quadratic correction")
        return relu.to_euclidean(zonal, cfg.relu.delta_pole), warns
    grid = gaussian.grid_centers(complexity, 1.0 if cfg.gaussian.c is None else cfg.gaussian.c, target.q)
    pts = probe_points(cfg, target.q)
    return gaussian.least_squares_fit(target, grid, pts), ["least-squares baseline (fitted, not constructive)"]


def measure_error(cfg, target, net):
    if cfg.metric == "weighted-sup":
        return weighted_norm(lambda *x: target(*x) - net(*x), target.q, probe_plan(cfg))
    if isinstance(net, gaussian.LatticeGaussianNet) and cfg.probe.random_points == 0 and not cfg.probe.tail_radii:
        axes = probe_plan(cfg).axes(target.q)
        ref = np.broadcast_to(target(*open_grid(axes)), (len(axes[0]),) * target.q)
        return float(np.max(np.abs(net.evaluate_grid(axes) - ref)))
    pts = probe_points(cfg, target.q)
    ref = np.broadcast_to(np.asarray(target(*pts.T), dtype=float), (len(pts),))
    return float(np.max(np.abs(net.evaluate(pts) - ref)))


def complexity_value(cfg, net, sweep_value):
    if cfg.complexity_axis == "m":
        return sweep_value
    if hasattr(net, "unit_count"):
        return net.unit_count()
    return len(net)


@dataclass
class PointResult:
    index: int
    sweep_value: int
    complexity: int = None
    error: float = None
    wall_ms: float = 0.0
    warnings: list = field(default_factory=list)
    net_record: str = None


def _run_point(cfg, target, index, value):
    res = PointResult(index, value)
    t0 = time.perf_counter()
    try:
        net, res.warnings = build_net(cfg, target, value)
        res.error = measure_error(cfg, target, net)
        res.complexity = complexity_value(cfg, net, value)
        if not math.isfinite(res.error):
            raise ValueError(f"non-finite error {res.error}")
        if cfg.save_nets:
            res.net_record = serialize.dumps(net)
    except Exception as exc:
        res.error = None
        res.complexity = res.complexity or value
        res.warnings = res.warnings + [f"failed: {type(exc).__name__}: {exc}"]
    res.wall_ms = 1000.0 * (time.perf_counter() - t0)
    return res


def _fmt(x):
    return "" if x is None else "%.17g" % x


def _csv_text(cfg, results):
    out = io.StringIO()
    out.write("complexity,error,wall_ms,warning\n")
    for r in results:
        warning = "; ".join(r.warnings).replace('"', "'")
        wall = _fmt(r.wall_ms) if cfg.record_timing else ""
        out.write(f'{r.complexity},{_fmt(r.error)},{wall},"{warning}"\n')
    return out.getvalue()


def curve_from_results(results, axis_label):
    ok = [r for r in results if r.error is not None and r.error > 0]
    return ErrorCurve(tuple(r.complexity for r in ok), tuple(r.error for r in ok), axis_label)


def _reference(cfg, target):
    if cfg.complexity_axis == "m":
        return {"form": "-gamma", "value": None if target.gamma is None else -target.gamma}
    dim = target.d if cfg.architecture == "deep" else target.q
    form = "-gamma/(2d)" if cfg.architecture == "deep" else "-gamma/(2q)"
    return {"form": form, "dimension": dim, "value": None if target.gamma is None else -target.gamma / (2 * dim)}


def summarize(cfg, target, results):
    caveats = [PROXY_CAVEAT]
    summary = {
        "name": cfg.name,
        "target": cfg.target,
        "family": cfg.family,
        "architecture": cfg.architecture,
        "metric": cfg.metric,
        "complexity_axis": cfg.complexity_axis,
        "tail_fraction": cfg.tail_fraction,
        "q": target.q,
        "d": target.d,
        "reference_exponent": _reference(cfg, target),
        "exponent": None,
        "confidence": None,
        "intercept": None,
        "residual": None,
        "points": 0,
    }
    failed = [r.index for r in results if r.error is None]
    if failed:
        caveats.append(f"sweep points {failed} failed and are excluded from the fit")
    try:
        curve = curve_from_results(results, cfg.complexity_axis)
        fit = fit_exponent(curve, cfg.tail_fraction)
        summary.update(
            exponent=fit.exponent,
            confidence=fit.half_width,
            intercept=fit.intercept,
            residual=fit.residual,
            points=fit.points,
        )
        if fit.exponent >= 0:
            caveats.append("errors do not decrease over the fitted tail")
    except Exception as exc:
        caveats.append(f"no fit: {exc}")
    summary["caveats"] = caveats
    return summary


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    version: str
    files: dict
    timings_ms: dict
    warnings: dict
    summary: dict
    output: str


def run(cfg, output=None, workers=None):
    validate_config(cfg)
    target = resolve_target(cfg)
    outdir = Path(output if output is not None else cfg.output)
    n_workers = workers if workers is not None else cfg.workers
    items = list(enumerate(cfg.sweep))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda iv: _run_point(cfg, target, *iv), items))
    else:
        results = [_run_point(cfg, target, i, v) for i, v in items]
    results.sort(key=lambda r: r.index)

    files = {}
    files["curve.csv"] = _write(outdir / "curve.csv", _csv_text(cfg, results))
    for r in results:
        if r.net_record is not None:
            name = f"nets/{r.index:02d}.json"
            files[name] = _write(outdir / name, r.net_record)
    summary = summarize(cfg, target, results)
    files["summary.json"] = _write(outdir / "summary.json", _dump_json(summary))
    manifest = RunManifest(
        cfg.digest(),
        __version__,
        files,
        {str(r.sweep_value): r.wall_ms for r in results},
        {str(r.sweep_value): r.warnings for r in results if r.warnings},
        summary,
        str(outdir),
    )
    _write(
        outdir / "manifest.json",
        _dump_json(
            {
                "config_hash": manifest.config_hash,
                "version": manifest.version,
                "files": manifest.files,
                "timings_ms": manifest.timings_ms,
                "warnings": manifest.warnings,
            }
        ),
    )
    return manifest


def read_curve(csv_path, axis_label="n"):
    comp, errs = [], []
    with open(csv_path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            c, e = line.split(",")[:2]
            if e:
                comp.append(int(c))
                errs.append(float(e))
    return ErrorCurve(tuple(comp), tuple(errs), axis_label)


def compare_curves(shallow, deep, tail_fraction=0.5, q=None, d=None):
    fs = fit_exponent(shallow, tail_fraction)
    fd = fit_exponent(deep, tail_fraction)
    out = {
        "shallow_exponent": fs.exponent,
        "shallow_confidence": fs.half_width,
        "deep_exponent": fd.exponent,
        "deep_confidence": fd.half_width,
        "ratio": fd.exponent / fs.exponent,
        "relative_dimension": relative_dimension(deep, shallow, tail_fraction, check=False),
        "half_width_ok": bool(fs.half_width < 0.2 and fd.half_width < 0.2),
        "caveats": [PROXY_CAVEAT],
    }
    if q is not None and d is not None:
        out["reference_ratio"] = q / d
        out["reference_relative_dimension"] = d / q
    return out


def compare(cfg_shallow, cfg_deep, rerun=False):
    """Exponents, their ratio and the relative dimension of two runs."""
    if cfg_shallow.metric != cfg_deep.metric:
        raise ConfigError(f"metric mismatch: {cfg_shallow.metric!r} vs {cfg_deep.metric!r}")
    if cfg_shallow.target != cfg_deep.target:
        raise ConfigError(f"target mismatch: {cfg_shallow.target!r} vs {cfg_deep.target!r}")
    if cfg_shallow.complexity_axis != cfg_deep.complexity_axis:
        raise ConfigError("complexity axes differ")
    curves = []
    for cfg in (cfg_shallow, cfg_deep):
        csv = Path(cfg.output) / "curve.csv"
        if rerun or not csv.exists():
            run(cfg)
        curves.append(read_curve(csv, cfg.complexity_axis))
    target = resolve_target(cfg_shallow)
    return compare_curves(curves[0], curves[1], cfg_shallow.tail_fraction, target.q, target.d)


def catalog_listing():
    rows = []
    for name, t in sorted(catalog.TARGETS.items()):
        rows.append({"name": name, "q": t.q, "d": t.d, "dag": t.gfunction is not None, "description": t.description})
    return rows


__all__ = [
    "ExperimentConfig",
    "RunManifest",
    "load_config",
    "config_from_dict",
    "validate_config",
    "run",
    "compare",
    "compare_curves",
    "catalog_listing",
]
