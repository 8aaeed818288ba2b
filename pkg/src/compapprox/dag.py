"""Compositional functions on DAGs and deep networks that mirror them."""

from dataclasses import dataclass, field
import graphlib

import numpy as np

from . import gaussian, relu
from .errors import DimensionError, DomainError, IncompleteDataError, StepError
from .sampling import box_lattice
from .sphere import weighted_norm

GAUSSIAN = "gaussian"
RELU = "relu-zonal"
FAMILIES = (GAUSSIAN, RELU)


@dataclass(frozen=True)
class DagSpec:
    """Named scalar inputs and nodes; ``nodes[v]`` lists v's arguments in order.

    Arguments name inputs or other nodes. ``arities`` optionally declares
    d(v); validation checks it against the argument lists.
    """

    inputs: tuple
    nodes: dict
    arities: dict = None

    @property
    def q(self):
        return len(self.inputs)

    def arity(self, v):
        return len(self.nodes[v])

    @property
    def d(self):
        return max(self.arity(v) for v in self.nodes)

    @property
    def edges(self):
        return [(a, v) for v, args in self.nodes.items() for a in args]

    def consumers(self, name):
        return [v for v, args in self.nodes.items() for a in args if a == name]

    @property
    def sinks(self):
        used = {a for args in self.nodes.values() for a in args}
        return [v for v in self.nodes if v not in used]

    @property
    def sink(self):
        sinks = self.sinks
        if len(sinks) != 1:
            raise DomainError(f"expected one sink, found {sinks}")
        return sinks[0]

    def order(self):
        graph = {v: [a for a in args if a in self.nodes] for v, args in self.nodes.items()}
        return list(graphlib.TopologicalSorter(graph).static_order())


@dataclass(frozen=True)
class DagReport:
    valid: bool
    violations: tuple
    node_count: int
    d: int
    sink: str = None
    order: tuple = ()


def validate_dag(spec):
    violations = []
    names = set(spec.inputs)
    for v, args in spec.nodes.items():
        if v in names:
            violations.append(f"node {v!r} shadows an input")
        if not args:
            violations.append(f"node {v!r} has no arguments")
        for a in args:
            if a not in names and a not in spec.nodes:
                violations.append(f"node {v!r} refers to unknown {a!r}")
        if spec.arities is not None:
            declared = spec.arities.get(v)
            if declared is None:
                violations.append(f"node {v!r} has no declared arity")
            elif declared != len(args):
                violations.append(f"node {v!r} declares arity {declared} but has {len(args)} arguments")
    order = ()
    try:
        order = tuple(spec.order())
    except graphlib.CycleError as exc:
        violations.append(f"cycle through {exc.args[1]!r}")
    sinks = spec.sinks
    if len(sinks) != 1:
        violations.append(f"expected exactly one sink, found {len(sinks)}: {sinks}")
    d = max((len(a) for a in spec.nodes.values()), default=0)
    return DagReport(
        not violations, tuple(violations), len(spec.nodes), d, sinks[0] if len(sinks) == 1 else None, order
    )


def _require_valid(spec):
    report = validate_dag(spec)
    if not report.valid:
        raise DomainError("invalid DAG: " + "; ".join(report.violations))
    return report


def binary_tree_dag(q):
    """Binary tree on q = 2^k inputs, named like h_3(h_21(h_11, h_12), h_22(...))."""
    if q < 2 or q & (q - 1):
        raise DomainError(f"binary trees need q a power of 2, got {q}")
    inputs = tuple(f"x{i}" for i in range(1, q + 1))
    nodes, level, current = {}, 1, list(inputs)
    while len(current) > 1:
        top = len(current) == 2
        nxt = []
        for k in range(len(current) // 2):
            name = f"h{level}" if top else f"h{level}{k + 1}"
            nodes[name] = (current[2 * k], current[2 * k + 1])
            nxt.append(name)
        current, level = nxt, level + 1
    return DagSpec(inputs, nodes, {v: 2 for v in nodes})


def _forward(spec, leaves, call_node):
    values = dict(zip(spec.inputs, leaves))
    for v in spec.order():
        try:
            values[v] = call_node(v, [values[a] for a in spec.nodes[v]])
        except Exception as exc:
            raise StepError(f"node {v}", exc) from exc
    return values[spec.sink]


@dataclass(frozen=True)
class GFunction:
    """Constituent functions attached to the nodes of a DAG.

    Weight sharing: nodes mapped to the same callable object are treated as
    one constituent by :func:`deep_approximate`.
    """

    dag: DagSpec
    constituents: dict
    lipschitz: dict = None

    def __post_init__(self):
        missing = set(self.dag.nodes) - set(self.constituents)
        if missing:
            raise IncompleteDataError(f"no constituent for nodes {sorted(missing)}")

    def __call__(self, *x):
        if len(x) != self.dag.q:
            raise DimensionError(f"expected {self.dag.q} inputs, got {len(x)}")
        x = np.broadcast_arrays(*[np.asarray(xi, dtype=float) for xi in x])
        return _forward(self.dag, x, lambda v, args: np.asarray(self.constituents[v](*args), dtype=float))

    def node_values(self, points):
        """Outputs of every node at ``points`` (shape (P, q))."""
        pts = np.asarray(points, dtype=float)
        values = {name: pts[:, i] for i, name in enumerate(self.dag.inputs)}
        for v in self.dag.order():
            values[v] = np.broadcast_to(
                np.asarray(self.constituents[v](*[values[a] for a in self.dag.nodes[v]]), dtype=float),
                (len(pts),),
            )
        return values


def evaluate_gfunction(f, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (f.dag.q,):
        raise DimensionError(f"expected points with {f.dag.q} coordinates, got shape {x.shape}")
    out = f(*np.moveaxis(x, -1, 0))
    return float(out) if np.ndim(out) == 0 else out


def g_norm(f, norm_kind, plan):
    """Sum over nodes of the sampled norm of each constituent on the plan's box."""
    total = 0.0
    for v in f.dag.nodes:
        h, d = f.constituents[v], f.dag.arity(v)
        if norm_kind == "weighted":
            total += weighted_norm(h, d, plan)
        elif norm_kind == "sup":
            pts = plan.points(d)
            total += float(np.max(np.abs(np.broadcast_to(h(*pts.T), (len(pts),)))))
        else:
            raise ValueError(f"unknown norm kind {norm_kind!r}")
    return total


@dataclass(frozen=True)
class DeepNet:
    dag: DagSpec
    node_nets: dict
    node_errors: dict = field(default_factory=dict)
    node_boxes: dict = field(default_factory=dict)

    def __call__(self, *x):
        x = np.broadcast_arrays(*[np.asarray(xi, dtype=float) for xi in x])
        return _forward(self.dag, x, lambda v, args: self.node_nets[v](*args))

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1:] != (self.dag.q,):
            raise DimensionError(f"expected points with {self.dag.q} coordinates, got shape {pts.shape}")
        return self(*np.moveaxis(pts, -1, 0))

    def unit_count(self, dedupe_shared=False):
        nets = self._nets(dedupe_shared)
        return sum(len(net) for net in nets)

    def parameter_count(self, dedupe_shared=False):
        """Units times per-unit parameters: d+2 for ReLU units, d+1 for Gaussians."""
        total = 0
        for net in self._nets(dedupe_shared):
            per_unit = net.q + 2 if isinstance(net, relu.EuclidReluNet) else net.q + 1
            total += len(net) * per_unit
        return total

    def _nets(self, dedupe_shared):
        nets = [self.node_nets[v] for v in self.dag.nodes]
        if dedupe_shared:
            seen, unique = set(), []
            for net in nets:
                if id(net) not in seen:
                    seen.add(id(net))
                    unique.append(net)
            nets = unique
        return nets


def probe_boxes(f, probe_points, inflate=0.1):
    """Per-node argument boxes from observed argument ranges, widened by ``inflate``."""
    values = f.node_values(probe_points)
    boxes = {}
    for v, args in f.dag.nodes.items():
        lo = np.array([values[a].min() for a in args])
        hi = np.array([values[a].max() for a in args])
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * (1.0 + inflate)
        half = np.where(half > 0, half, inflate)
        boxes[v] = (mid - half, mid + half)
    return boxes


def default_probe(q, radius=3.0, count=4096, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(count, q))


def _shallow(h, d, family, complexity, options):
    if family == GAUSSIAN:
        return gaussian.approximate(h, d, complexity, **options)
    if family == RELU:
        return relu.approximate(h, d, complexity, **options)
    raise ValueError(f"unknown family {family!r}")


def node_error(h, net, box, points_per_axis=21):
    pts = box_lattice(box[0], box[1], points_per_axis)
    target = np.broadcast_to(np.asarray(h(*pts.T), dtype=float), (len(pts),))
    return float(np.max(np.abs(target - net.evaluate(pts))))


def deep_approximate(
    f, family, complexity, probe_points=None, inflate=0.1, error_points_per_axis=21, **options
):
    """Approximate each constituent by the chosen family and assemble a DeepNet.

    Constituents shared between nodes (the same callable) are built once.
    Per-node errors are sup errors on the node's probed argument box.
    """
    _require_valid(f.dag)
    probe = default_probe(f.dag.q) if probe_points is None else probe_points
    boxes = probe_boxes(f, probe, inflate)
    cache, nets, errors = {}, {}, {}
    for v in f.dag.order():
        h, d = f.constituents[v], f.dag.arity(v)
        key = (id(h), d)
        try:
            if key not in cache:
                cache[key] = _shallow(h, d, family, complexity, options)
            nets[v] = cache[key]
            errors[v] = node_error(h, nets[v], boxes[v], error_points_per_axis)
        except Exception as exc:
            raise StepError(f"node {v}", exc) from exc
    return DeepNet(f.dag, nets, errors, boxes)


def path_weights(dag, lipschitz):
    """sum over paths from v to the sink of the product of Lipschitz constants after v."""
    _require_valid(dag)
    order = dag.order()
    weights = {}
    for v in reversed(order):
        consumers = dag.consumers(v)
        if not consumers:
            weights[v] = 1.0
            continue
        total = 0.0
        for w in consumers:
            if w not in lipschitz:
                raise IncompleteDataError(f"missing Lipschitz constant for node {w!r}")
            if lipschitz[w] <= 0:
                raise DomainError(f"Lipschitz constant for {w!r} must be positive")
            total += lipschitz[w] * weights[w]
        weights[v] = total
    return weights


def error_propagation_bound(per_node_error, lipschitz, dag):
    """sum_v e_v * (sum over paths v -> sink of prod of downstream Lipschitz constants)."""
    weights = path_weights(dag, lipschitz)
    missing = set(dag.nodes) - set(per_node_error)
    if missing:
        raise IncompleteDataError(f"missing node errors for {sorted(missing)}")
    return float(sum(per_node_error[v] * weights[v] for v in dag.nodes))


def estimate_lipschitz(fn, box, samples=2000, seed=0, fd_step=1e-6):
    """Lower estimate of the Lipschitz constant of ``fn`` on a box.

    Max of |f(a) - f(b)| / |a - b| over random pairs and of the central
    finite-difference gradient norm at random points.
    """
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    rng = np.random.default_rng(seed)
    a = rng.uniform(lo, hi, size=(samples, len(lo)))
    b = rng.uniform(lo, hi, size=(samples, len(lo)))

    def ev(p):
        return np.broadcast_to(np.asarray(fn(*p.T), dtype=float), (len(p),))

    dist = np.linalg.norm(a - b, axis=1)
    ok = dist > 0
    best = float(np.max(np.abs(ev(a) - ev(b))[ok] / dist[ok])) if ok.any() else 0.0
    grad = np.zeros_like(a)
    scale = np.maximum(hi - lo, 1.0)
    for i in range(len(lo)):
        step = np.zeros(len(lo))
        step[i] = fd_step * scale[i]
        grad[:, i] = (ev(a + step) - ev(a - step)) / (2.0 * step[i])
    return max(best, float(np.max(np.linalg.norm(grad, axis=1))))


def fstar_dag():
    """The ten-node DAG on nine inputs used as the running G-function example."""
    inputs = tuple(f"x{i}" for i in range(1, 10))
    nodes = {
        "h12": ("x6", "x7", "x8", "x9"),
        "h16": ("h12",),
        "h10": ("x1", "x2", "x3", "h16"),
        "h11": ("x4", "x5"),
        "h13": ("h10", "h11"),
        "h14": ("h10", "h11"),
        "h17": ("h13", "h14", "h16"),
        "h15": ("h11", "h12"),
        "h18": ("h15", "h16"),
        "h19": ("h17", "h18"),
    }
    return DagSpec(inputs, nodes, {v: len(a) for v, a in nodes.items()})
