"""SIR contagion over a configuration-model graph revealed on the fly.

Every agent draws a Poisson number of half-edges.  Edges are only revealed
when an agent gets infected: the macro state matches its remaining
half-edges with other agents' half-edges, chosen in proportion to their free
degree, and couples the pairs in both directions.

An infected agent runs an exponential race between recovering (rate gamma)
and infecting one susceptible neighbour (rate beta each).  Agents broadcast
their compartment to their neighbours whenever it changes, and answer a
broadcast from a neighbour they did not know yet, so both ends of a new edge
learn about each other in zero time.

Quarantine: while the infected share exceeds ``QT`` a susceptible agent
discards an infection with probability ``QA``.

:func:`integrate_ode` is the deterministic reference for the same process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..dynstruct import StructureChange
from ..errors import ConfigurationError, InstabilityError, ParameterError, QueryError
from ..kernel import INFINITY, Atomic, Coupled, Simulator
from ..macro import MacroState
from ..rng import RngStream, WeightedPool
from ..stats import TimeSeries, uniform_grid
from .base import RunResult, check_range, resolve_params

S, I, R = "S", "I", "R"
QUARANTINE_CONDITION = "QUARANTINE_CONDITION"

DEFAULTS = {
    "N": 1000,
    "beta": 3.0,
    "gamma": 1.0,
    "lambda": 8.0,
    "QT": 1.0,
    "QA": 1.0,
    "t_end": 4.0,
}
OBSERVABLES = ("S_frac", "I_frac", "R_frac")


def sir_time_advance(compartment, n_susceptible: int, beta: float, gamma: float, stream: RngStream):
    """Next event delay of an agent and whether that event is its recovery."""
    if compartment != I:
        return INFINITY, False
    rate = n_susceptible * beta + gamma
    ta = stream.exponential(1.0 / rate)
    if n_susceptible == 0:
        return ta, True
    return ta, stream.uniform() < gamma / rate


def quarantine_condition(counts: dict, n: int, threshold: float) -> bool:
    return counts[I] / n > threshold


class SirAgent(Atomic):
    dynamic_ports = True

    def __init__(self, model_id, free_degree: int, compartment=S, beta=3.0, gamma=1.0, qa=1.0):
        super().__init__(model_id)
        self.compartment = compartment
        self.neighbours: dict = {}
        self.free_degree = free_degree
        self.beta = beta
        self.gamma = gamma
        self.qa = qa
        self.to_recover = False
        self.share_state = compartment == I
        self.target = None

    def susceptible_neighbours(self) -> list:
        return [j for j, c in self.neighbours.items() if c == S]

    def time_advance(self):
        if self.share_state:
            return 0.0
        susceptible = self.susceptible_neighbours()
        ta, self.to_recover = sir_time_advance(
            self.compartment, len(susceptible), self.beta, self.gamma, self.rng
        )
        self.target = None if self.to_recover or ta == INFINITY else self.rng.choice(susceptible)
        return ta

    def output(self):
        if self.share_state:
            return {"out": ("state", self.id, self.compartment)}
        if self.target is not None:
            return {f"n{self.target}": ("infect", self.id)}
        return None

    def delta_int(self, macro):
        if self.share_state:
            self.share_state = False
        elif self.compartment == I and self.to_recover:
            self.compartment = R
            self.share_state = True
            self.send_up((self.id, self.free_degree, False))

    def delta_ext(self, elapsed, inputs, macro):
        for msg in inputs:
            kind, sender = msg.payload[0], msg.payload[1]
            if kind == "state":
                if sender not in self.neighbours:
                    # a freshly revealed edge: introduce ourselves back
                    self.free_degree = max(self.free_degree - 1, 0)
                    self.share_state = True
                self.neighbours[sender] = msg.payload[2]
            elif kind == "infect" and self.compartment == S:
                if not macro(QUARANTINE_CONDITION) or self.rng.uniform() >= self.qa:
                    self.compartment = I
                    self.share_state = True
                    self.send_up((self.id, self.free_degree, True))


def link(a, b) -> list:
    """Couplings for one undirected edge: broadcasts both ways plus direct infect ports."""
    return [
        ((a, "out"), (b, "in")),
        ((b, "out"), (a, "in")),
        ((a, f"n{b}"), (b, "in")),
        ((b, f"n{a}"), (a, "in")),
    ]


def reveal_edges(pool: WeightedPool, node, stream: RngStream) -> list:
    """Match ``node``'s free half-edges with other nodes' half-edges.

    Draws ``min(free, available)`` distinct partners in proportion to their
    free degree and removes the matched half-edges from the pool.
    """
    free = int(pool.weight(node))
    if free == 0:
        return []
    pool.set(node, 0)
    count = min(free, pool.positive)
    targets = pool.sample_distinct(stream, count) if count else []
    pool.set(node, free - len(targets))
    for t in targets:
        pool.add_to(t, -1)
    return targets


class SirMacro(MacroState):
    properties = frozenset({QUARANTINE_CONDITION})

    def __init__(self, free_degrees: dict, states: dict, params: dict):
        counts = {S: 0, I: 0, R: 0}
        for c in states.values():
            counts[c] += 1
        super().__init__(
            {
                "nodes_free_degree": WeightedPool(free_degrees),
                "agent_states": dict(states),
                "counts": counts,
                "QT": params["QT"],
                "QA": params["QA"],
                "beta": params["beta"],
                "gamma": params["gamma"],
            }
        )
        self.n = len(states)
        self.edges: list = []

    def connect(self, node, stream: RngStream) -> list:
        targets = reveal_edges(self.s_g["nodes_free_degree"], node, stream)
        for t in targets:
            self.edges.append((node, t))
        return targets

    def delta_g(self, elapsed, x_b_micro, parent_view):
        states = self.s_g["agent_states"]
        counts = self.s_g["counts"]
        for agent_id, _free, new_infected in x_b_micro:
            old = states[agent_id]
            new = I if new_infected else R
            states[agent_id] = new
            counts[old] -= 1
            counts[new] += 1
            if new_infected:
                for t in self.connect(agent_id, self.rng):
                    for src, dst in link(agent_id, t):
                        self.request(StructureChange.connect(src, dst))
        return None

    def v_down(self, prop, *params):
        if prop == QUARANTINE_CONDITION:
            return quarantine_condition(self.s_g["counts"], self.n, self.s_g["QT"])
        raise QueryError(f"unknown property {prop!r}")

    def fractions(self) -> tuple[float, float, float]:
        c = self.s_g["counts"]
        return c[S] / self.n, c[I] / self.n, c[R] / self.n


def check(p: dict) -> dict:
    check_range(p, "N", 1)
    check_range(p, "QT", 0.0, 1.0)
    check_range(p, "QA", 0.0, 1.0)
    if not (p["beta"] >= 0 and p["gamma"] > 0 and p["lambda"] > 0):
        raise ConfigurationError("need beta >= 0, gamma > 0 and lambda > 0")
    return p


def build(params: dict | None = None, seed: int = 0) -> Coupled:
    p = check(resolve_params(DEFAULTS, params))
    stream = RngStream(seed, ("build", "epidemic"))
    n = p["N"]
    free = {i: stream.poisson(p["lambda"]) for i in range(n)}
    states = {i: (I if i == 0 else S) for i in range(n)}
    macro = SirMacro(free, states, p)
    root = Coupled("epidemic", macro)
    agents = {}
    for i in range(n):
        agents[i] = root.add(SirAgent(i, free[i], states[i], p["beta"], p["gamma"], p["QA"]))
    # the first infected agent's contacts are revealed up front
    for t in macro.connect(0, stream):
        for src, dst in link(0, t):
            root.connect(src, dst)
    return root


def run(params=None, seed=0, t_end=None, sample_times=None, trace=None, macro_enabled=True) -> RunResult:
    p = resolve_params(DEFAULTS, params)
    t_end = p["t_end"] if t_end is None else float(t_end)
    if t_end < 0:
        raise ConfigurationError("t_end must be non-negative")
    root = build(p, seed)
    macro = root.macro
    sim = Simulator(root, seed, trace=trace, macro_enabled=macro_enabled)
    observers = {
        "S_frac": lambda _s: macro.fractions()[0],
        "I_frac": lambda _s: macro.fractions()[1],
        "R_frac": lambda _s: macro.fractions()[2],
    }
    grid = uniform_grid(t_end) if sample_times is None else sample_times
    summary = sim.run_until(t_end, observers, grid)
    series: dict[str, TimeSeries] = summary.series
    peak = max(series["I_frac"].values) if len(series["I_frac"]) else None
    s, i, r = macro.fractions()
    return RunResult(series, {"S_frac": s, "I_frac": i, "R_frac": r, "peak_I": peak}, sim.steps)


# ---------------------------------------------------------------- reference ODE


@dataclass(frozen=True)
class OdeState:
    alpha: float
    I: float
    p_S: float
    p_I: float
    lambda_pgf: float


def initial_ode_state(n: int, lam: float) -> OdeState:
    eps = 1.0 / n
    return OdeState(1.0, eps, 1.0 - eps, eps, lam)


def pgf(alpha: float, lam: float) -> float:
    """Poisson generating function g(alpha)."""
    return math.exp(lam * (alpha - 1.0))


def ode_derivatives(s: OdeState, beta: float, gamma: float) -> OdeState:
    """Time derivatives of the edge-based SIR system on a Poisson graph.

    With g Poisson, g' = lam g and alpha g''/g' = alpha lam.
    """
    if not s.alpha > 0:
        raise ParameterError(f"alpha must be positive, got {s.alpha}")
    lam = s.lambda_pgf
    g1 = lam * pgf(s.alpha, lam)
    ratio = s.alpha * lam
    infect = beta * s.p_I
    return OdeState(
        alpha=-infect * s.alpha,
        I=-gamma * s.I + infect * s.alpha * g1,
        p_S=-ratio * s.p_S * infect + s.p_S * infect,
        p_I=-gamma * s.p_I + s.p_I * beta * s.p_S * ratio - beta * s.p_I * (1.0 - s.p_I),
        lambda_pgf=0.0,
    )


def _axpy(s: OdeState, k: OdeState, h: float) -> OdeState:
    return OdeState(s.alpha + h * k.alpha, s.I + h * k.I, s.p_S + h * k.p_S, s.p_I + h * k.p_I, s.lambda_pgf)


def rk4_step(s: OdeState, beta: float, gamma: float, dt: float) -> OdeState:
    k1 = ode_derivatives(s, beta, gamma)
    k2 = ode_derivatives(_axpy(s, k1, dt / 2), beta, gamma)
    k3 = ode_derivatives(_axpy(s, k2, dt / 2), beta, gamma)
    k4 = ode_derivatives(_axpy(s, k3, dt), beta, gamma)
    w = dt / 6
    return OdeState(
        s.alpha + w * (k1.alpha + 2 * k2.alpha + 2 * k3.alpha + k4.alpha),
        s.I + w * (k1.I + 2 * k2.I + 2 * k3.I + k4.I),
        s.p_S + w * (k1.p_S + 2 * k2.p_S + 2 * k3.p_S + k4.p_S),
        s.p_I + w * (k1.p_I + 2 * k2.p_I + 2 * k3.p_I + k4.p_I),
        s.lambda_pgf,
    )


def _check_bounds(s: OdeState, t: float, tol: float = 1e-6) -> None:
    for name in ("alpha", "I", "p_S", "p_I"):
        v = getattr(s, name)
        if not (-tol <= v <= 1 + tol):
            raise InstabilityError(f"{name}={v} left [0, 1] at t={t}")


def integrate_ode(
    initial: OdeState,
    beta: float,
    gamma: float,
    t_end: float,
    dt: float = 1e-3,
    sample_times=None,
) -> dict[str, TimeSeries]:
    """Fixed-step RK4; returns S, I and R fractions at ``sample_times``.

    Sample times are rounded to the nearest step.  S is g(alpha) and
    R = 1 - S - I, which starts at -I(0) because S(0) = g(1) = 1.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise ParameterError(f"t_end must be non-negative, got {t_end}")
    grid = uniform_grid(t_end) if sample_times is None else list(sample_times)
    wanted = {}
    for t in grid:
        wanted.setdefault(int(round(t / dt)), []).append(t)
    out = {k: TimeSeries(k) for k in ("S_frac", "I_frac", "R_frac")}
    last = max(wanted) if wanted else 0
    s = initial
    _check_bounds(s, 0.0)
    for step in range(last + 1):
        if step:
            s = rk4_step(s, beta, gamma, dt)
            _check_bounds(s, step * dt)
        for t in wanted.get(step, ()):
            S_ = pgf(s.alpha, s.lambda_pgf)
            out["S_frac"].append(t, S_)
            out["I_frac"].append(t, s.I)
            out["R_frac"].append(t, 1.0 - S_ - s.I)
    return out
