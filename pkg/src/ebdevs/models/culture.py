"""Dissemination of culture on a square lattice, with an optional fashion field.

Each agent holds a culture vector of ``F`` traits in ``1..Q``.  Once per time
unit it either adopts the current fashion (with probability
``fashion_rate``) or interacts with a random lattice neighbour: with
probability equal to their similarity it copies one trait on which they
differ.  Whenever its culture changes the agent broadcasts it to its
neighbours in zero time.

The macro state keeps every agent's culture and per-feature trait counts, and
answers FASHION_FEATURE with a random feature and that feature's most common
trait.
"""

from __future__ import annotations

from ..errors import ConfigurationError, QueryError, ShapeError
from ..kernel import Atomic, Coupled, Simulator
from ..macro import MacroState
from ..rng import RngStream
from ..stats import TimeSeries, distinct_cultures, uniform_grid
from .base import RunResult, check_range, resolve_params

FASHION_FEATURE = "FASHION_FEATURE"

DEFAULTS = {
    "F": 5,
    "Q": 5,
    "fashion_rate": 0.0,
    "side": 10,
    "t_end": 10000.0,
    "stop_when_frozen": True,
}
OBSERVABLES = ("distinct_cultures",)


def similarity(a, b) -> float:
    if len(a) != len(b):
        raise ShapeError(f"cultures of length {len(a)} and {len(b)}")
    return sum(1 for x, y in zip(a, b) if x == y) / len(a)


def mode_of(counts) -> int:
    """Most frequent trait in a count vector indexed by trait; smallest wins ties."""
    best, best_count = None, -1
    for trait, c in enumerate(counts):
        if c > best_count:
            best, best_count = trait, c
    return best


def fashion_feature(cultures, stream: RngStream, Q: int | None = None) -> tuple[int, int]:
    """Random feature index and the modal trait of that feature over ``cultures``."""
    cultures = list(cultures)
    if not cultures:
        raise QueryError("no cultures known yet")
    F = len(cultures[0])
    feature = stream.randint(0, F - 1)
    top = Q if Q is not None else max(c[feature] for c in cultures)
    counts = [0] * (top + 1)
    for c in cultures:
        counts[c[feature]] += 1
    return feature, mode_of(counts)


class CultureMacro(MacroState):
    properties = frozenset({FASHION_FEATURE})

    def __init__(self, F: int, Q: int):
        super().__init__({"models_cultures": {}})
        self.F = F
        self.Q = Q
        self.counts = [[0] * (Q + 1) for _ in range(F)]

    def delta_g(self, elapsed, x_b_micro, parent_view):
        cultures = self.s_g["models_cultures"]
        counts = self.counts
        for agent_id, culture in x_b_micro:
            old = cultures.get(agent_id)
            if old == culture:
                continue
            for f, trait in enumerate(culture):
                counts[f][trait] += 1
                if old is not None:
                    counts[f][old[f]] -= 1
            cultures[agent_id] = culture
        return None

    def v_down(self, prop, *params):
        if prop == FASHION_FEATURE:
            if not self.s_g["models_cultures"]:
                raise QueryError("no cultures known yet")
            feature = self.rng.randint(0, self.F - 1)
            return feature, mode_of(self.counts[feature])
        raise QueryError(f"unknown property {prop!r}")


class CultureAgent(Atomic):
    def __init__(self, model_id, culture, fashion_rate: float = 0.0):
        super().__init__(model_id)
        self.culture = tuple(culture)
        self.neighbours: dict = {}
        self.share_culture = True
        self.fashion_rate = fashion_rate
        self.wait = 1.0

    def output(self):
        if self.share_culture:
            return {"out": (self.id, self.culture)}
        return None

    def time_advance(self):
        return 0.0 if self.share_culture else self.wait

    def delta_int(self, macro):
        if self.share_culture:
            self.share_culture = False
        else:
            self.interact(macro)
        self.wait = 1.0
        self.send_up((self.id, self.culture))

    def interact(self, macro) -> None:
        rng = self.rng
        if self.fashion_rate > 0 and rng.uniform() < self.fashion_rate:
            feature, trait = macro(FASHION_FEATURE)
            if self.culture[feature] != trait:
                self._set(feature, trait)
            return
        if not self.neighbours:
            return
        other = self.neighbours[rng.choice(list(self.neighbours))]
        sim = similarity(self.culture, other)
        if rng.uniform() < sim < 1:
            differing = [f for f in range(len(other)) if other[f] != self.culture[f]]
            f = rng.choice(differing)
            self._set(f, other[f])

    def _set(self, feature: int, trait: int) -> None:
        c = list(self.culture)
        c[feature] = trait
        self.culture = tuple(c)
        self.share_culture = True

    def delta_ext(self, elapsed, inputs, macro):
        for msg in inputs:
            sender, culture = msg.payload
            self.neighbours[sender] = culture
        self.wait = max(self.wait - elapsed, 0.0)


def lattice_neighbours(side: int, i: int) -> list[int]:
    r, c = divmod(i, side)
    out = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < side and 0 <= cc < side:
            out.append(rr * side + cc)
    return out


def check(p: dict) -> dict:
    check_range(p, "F", 1)
    check_range(p, "Q", 1)
    check_range(p, "side", 1)
    check_range(p, "fashion_rate", 0.0, 1.0)
    return p


def build(params: dict | None = None, seed: int = 0) -> Coupled:
    p = check(resolve_params(DEFAULTS, params))
    rng = RngStream(seed, ("build", "culture"))
    side, F, Q = p["side"], p["F"], p["Q"]
    root = Coupled("culture", CultureMacro(F, Q))
    agents = []
    for i in range(side * side):
        culture = [rng.randint(1, Q) for _ in range(F)]
        agents.append(root.add(CultureAgent(i, culture, p["fashion_rate"])))
    for i in range(side * side):
        for j in lattice_neighbours(side, i):
            root.connect((i, "out"), (j, "in"))
    return root


def agents_of(root: Coupled) -> list[CultureAgent]:
    return [m for m in root.components.values() if isinstance(m, CultureAgent)]


def is_frozen(root: Coupled) -> bool:
    """True once no agent can ever change its culture again.

    Requires every agent's neighbour knowledge to be current.  Without
    fashion that means no neighbour pair has similarity strictly between 0
    and 1; with fashion it means a single shared culture.
    """
    agents = {a.id: a for a in agents_of(root)}
    fashion = any(a.fashion_rate > 0 for a in agents.values())
    for a in agents.values():
        if a.share_culture:
            return False
        for j, known in a.neighbours.items():
            other = agents[j].culture
            if known != other:
                return False
            if fashion:
                if other != a.culture:
                    return False
            elif 0 < similarity(a.culture, other) < 1:
                return False
    return True


def run(params=None, seed=0, t_end=None, sample_times=None, trace=None, macro_enabled=True) -> RunResult:
    """One realisation; samples the number of distinct cultures.

    With ``stop_when_frozen`` the run ends once the lattice has reached an
    absorbing state and the last count is carried to the remaining samples.
    """
    p = resolve_params(DEFAULTS, params)
    t_end = p["t_end"] if t_end is None else float(t_end)
    if t_end < 0:
        raise ConfigurationError("t_end must be non-negative")
    root = build(p, seed)
    sim = Simulator(root, seed, trace=trace, macro_enabled=macro_enabled)
    agents = agents_of(root)
    grid = uniform_grid(t_end) if sample_times is None else list(sample_times)
    series = TimeSeries("distinct_cultures")
    frozen_at = None
    for t in grid:
        if frozen_at is None:
            sim.run_until(t)
            if p["stop_when_frozen"] and is_frozen(root):
                frozen_at = t
        series.append(t, distinct_cultures(a.culture for a in agents))
    return RunResult(
        {"distinct_cultures": series},
        {"distinct_cultures": series.values[-1], "frozen_at": frozen_at},
        sim.steps,
    )
