"""Network growth by preferential attachment.

Starts from two connected nodes.  Every node fires once, one time unit after
it was created; its upward value makes the macro state create a new node and
attach it to ``connect_to`` existing nodes drawn without replacement with
probability proportional to their degree.  The macro state is the
authoritative record of degrees and edges.
"""

from __future__ import annotations

from ..dynstruct import StructureChange
from ..errors import ConfigurationError, QueryError
from ..kernel import INFINITY, Atomic, Coupled, Simulator
from ..macro import MacroState
from ..rng import RngStream, WeightedPool
from ..stats import TimeSeries, uniform_grid
from .base import RunResult, check_range, resolve_params

DEGREE = "DEGREE"

DEFAULTS = {"connect_to": 1, "t_end": 2000.0}
OBSERVABLES = ("average_degree",)


def sample_attach_targets(pool: WeightedPool, stream: RngStream, connect_to: int) -> list:
    """``connect_to`` distinct ids, size-biased by degree; all ids while the pool is smaller."""
    if len(pool) < connect_to:
        return pool.ids()
    return pool.sample_distinct(stream, connect_to)


class NetworkMacro(MacroState):
    properties = frozenset({DEGREE})

    def __init__(self, connect_to: int):
        super().__init__({"nodes_degree": {}, "topology": [], "connect_to": connect_to})
        self.pool = WeightedPool()
        self.next_id = 0

    def add_node(self, node_id, targets) -> None:
        degrees = self.s_g["nodes_degree"]
        degrees[node_id] = len(targets)
        self.pool.add(node_id, len(targets))
        for t in targets:
            degrees[t] += 1
            self.pool.add_to(t, 1)
            self.s_g["topology"].append((node_id, t))
        self.next_id = max(self.next_id, node_id + 1)

    def delta_g(self, elapsed, x_b_micro, parent_view):
        for _ in x_b_micro:
            self.grow()
        return None

    def grow(self):
        node_id = self.next_id
        targets = sample_attach_targets(self.pool, self.rng, self.s_g["connect_to"])
        self.add_node(node_id, targets)
        self.request(StructureChange.add_atomic(self.coupled.id, NetworkNode(node_id)))
        for t in targets:
            self.request(StructureChange.connect((node_id, "out"), (t, "in")))
        return node_id

    def v_down(self, prop, *params):
        if prop == DEGREE:
            return self.s_g["nodes_degree"][params[0]]
        raise QueryError(f"unknown property {prop!r}")


class NetworkNode(Atomic):
    def __init__(self, model_id, fired: bool = False):
        super().__init__(model_id)
        self.fired = fired

    def time_advance(self):
        return INFINITY if self.fired else 1.0

    def delta_int(self, macro):
        self.fired = True
        self.send_up((self.id, macro(DEGREE, self.id)))


def check(p: dict) -> dict:
    check_range(p, "connect_to", 1, 3)
    return p


def build(params: dict | None = None, seed: int = 0) -> Coupled:
    p = check(resolve_params(DEFAULTS, params))
    macro = NetworkMacro(p["connect_to"])
    root = Coupled("network", macro)
    # node 0 stands for the seed pair's history; only node 1 triggers growth
    root.add(NetworkNode(0, fired=True))
    root.add(NetworkNode(1))
    root.connect((1, "out"), (0, "in"))
    macro.add_node(0, [])
    macro.add_node(1, [0])
    return root


def degrees(root: Coupled) -> dict:
    return dict(root.macro.s_g["nodes_degree"])


def run(params=None, seed=0, t_end=None, sample_times=None, trace=None, macro_enabled=True) -> RunResult:
    p = resolve_params(DEFAULTS, params)
    t_end = p["t_end"] if t_end is None else float(t_end)
    if t_end < 0:
        raise ConfigurationError("t_end must be non-negative")
    root = build(p, seed)
    sim = Simulator(root, seed, trace=trace, macro_enabled=macro_enabled)
    deg = root.macro.s_g["nodes_degree"]

    def average_degree(_sim):
        return 2 * len(root.macro.s_g["topology"]) / len(deg)

    grid = uniform_grid(t_end) if sample_times is None else sample_times
    summary = sim.run_until(t_end, {"average_degree": average_degree}, grid)
    series: dict[str, TimeSeries] = summary.series
    return RunResult(
        series,
        {
            "nodes": len(deg),
            "edges": len(root.macro.s_g["topology"]),
            "degrees": [deg[k] for k in sorted(deg)],
        },
        sim.steps,
    )
