"""Sugarscape with a Gini-index feedback on consumption.

Two kinds of atomics share one coupled model: cells, which regrow one unit
of sugar per exponential tick up to their capacity, and agents, which move to
the richest visible free cell and eat.  The macro state mirrors occupancy,
sugar levels and every agent's wealth.  When the wealth Gini index is at or
above ``gini_cutoff`` agents only eat what their metabolism burns.

An agent move is two transitions: the move itself, then a zero-delay report
whose output tells the cell how much sugar was taken.  The macro state keeps
each agent's output coupled to the cell it stands on.  Dead agents are
replaced at once by a fresh agent on a random free cell.
"""

from __future__ import annotations

import math

from ..dynstruct import StructureChange
from ..errors import ConfigurationError, QueryError, UndefinedStatisticError
from ..kernel import INFINITY, Atomic, Coupled, Simulator
from ..macro import MacroState
from ..rng import RngStream
from ..stats import TimeSeries, gini, uniform_grid
from .base import RunResult, check_range, resolve_params

AGENT, CELL = "AGENT", "CELL"
MAX_SUGAR_NEXT_CELL = "MAX_SUGAR_NEXT_CELL"
GINI = "GINI"

DEFAULTS = {
    "gini_cutoff": 1.0,
    "agents": 50,
    "side": 30,
    "t_end": 200.0,
}
OBSERVABLES = ("gini",)

PEAKS = ((7, 7), (22, 22))
SIGMA = 6.0


def generate_terrain(side: int = 30, peaks=PEAKS, sigma: float = SIGMA) -> list[list[int]]:
    """Capacity map with two Gaussian hills of height 4 rounded to integers."""
    out = []
    for r in range(side):
        row = []
        for c in range(side):
            h = max(math.exp(-((r - pr) ** 2 + (c - pc) ** 2) / (2 * sigma**2)) for pr, pc in peaks)
            row.append(min(max(int(round(4 * h)), 0), 4))
        out.append(row)
    return out


def max_sugar_next_cell(sugar_grid, occupied, position, vision: int, stream: RngStream):
    """Richest free cell along the four axes within ``vision``, or the current cell.

    Ties go to the nearest cell, then to a uniform draw from ``stream``.
    Returns ``(cell, sugar)``.
    """
    side_r = len(sugar_grid)
    side_c = len(sugar_grid[0])
    r, c = position
    best = [(position, sugar_grid[r][c])]
    best_key = (sugar_grid[r][c], 0)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        for k in range(1, vision + 1):
            rr, cc = r + dr * k, c + dc * k
            if not (0 <= rr < side_r and 0 <= cc < side_c):
                break
            if (rr, cc) in occupied:
                continue
            key = (sugar_grid[rr][cc], -k)
            if key > best_key:
                best_key = key
                best = [((rr, cc), sugar_grid[rr][cc])]
            elif key == best_key:
                best.append(((rr, cc), sugar_grid[rr][cc]))
    if len(best) == 1:
        return best[0]
    return stream.choice(best)


def cell_id(position) -> str:
    return f"c{position[0]}_{position[1]}"


class SugarCell(Atomic):
    out_ports = ()

    def __init__(self, model_id, position, capacity: int, sugar: float | None = None):
        super().__init__(model_id)
        self.position = tuple(position)
        self.capacity = capacity
        self.sugar = float(capacity if sugar is None else sugar)

    def time_advance(self):
        # a full cell has nothing to do; exponential clocks are memoryless
        if self.sugar < self.capacity:
            return self.rng.exponential(0.5)
        return INFINITY

    def delta_int(self, macro):
        self.sugar = min(self.sugar + 1, self.capacity)
        self.send_up((CELL, self.position, self.sugar))

    def delta_ext(self, elapsed, inputs, macro):
        for msg in inputs:
            self.sugar = max(self.sugar - msg.payload, 0.0)
        self.send_up((CELL, self.position, self.sugar))


class SugarAgent(Atomic):
    in_ports = ()

    def __init__(self, model_id, position, vision, metabolic_rate, wealth, max_age, gini_cutoff=1.0):
        super().__init__(model_id)
        self.position = tuple(position)
        self.vision = vision
        self.metabolic_rate = metabolic_rate
        self.wealth = wealth
        self.max_age = max_age
        self.gini_cutoff = gini_cutoff
        self.age = 0.0
        self.last_consumed = 0.0
        self.alive = True
        self.reporting = False
        self.sigma = 0.0

    def time_advance(self):
        if self.reporting:
            self.sigma = 0.0
        elif self.alive:
            self.sigma = self.rng.exponential(0.5)
        else:
            self.sigma = INFINITY
        return self.sigma

    def output(self):
        if self.reporting and self.last_consumed > 0:
            return {"out": self.last_consumed}
        return None

    def delta_int(self, macro):
        if self.reporting:
            self.reporting = False
            if not self.alive:
                self.request_structure_change()
            return
        self.age += self.sigma
        last = self.position
        self.position, sugar = macro(MAX_SUGAR_NEXT_CELL, last, self.vision)
        if macro(GINI) < self.gini_cutoff:
            self.last_consumed = sugar
        else:
            self.last_consumed = min(sugar, self.metabolic_rate)
        self.consume()
        self.reporting = True
        self.send_up((AGENT, self.id, last, self.position, self.alive, self.wealth))

    def consume(self) -> None:
        self.wealth += self.last_consumed - self.metabolic_rate
        if self.wealth < 0 or self.age > self.max_age:
            self.alive = False


class SugarscapeModel(Coupled):
    def on_structure_request(self, model):
        return [StructureChange.remove_atomic(model.id)]


def draw_agent(stream: RngStream, model_id, position, gini_cutoff) -> SugarAgent:
    return SugarAgent(
        model_id,
        position,
        vision=stream.randint(1, 6),
        metabolic_rate=stream.uniform_range(1, 2),
        wealth=stream.uniform_range(5, 25),
        max_age=stream.uniform_range(5, 25),
        gini_cutoff=gini_cutoff,
    )


def random_free_cell(stream: RngStream, side: int, occupied) -> tuple[int, int]:
    if len(occupied) >= side * side:
        raise QueryError("no free cell left")
    while True:
        cell = (stream.randint(0, side - 1), stream.randint(0, side - 1))
        if cell not in occupied:
            return cell


class SugarscapeMacro(MacroState):
    properties = frozenset({MAX_SUGAR_NEXT_CELL, GINI})

    def __init__(self, capacity, gini_cutoff: float):
        side = len(capacity)
        super().__init__(
            {
                "agent_grid": {},
                "sugar_grid": [[float(v) for v in row] for row in capacity],
                "wealth": {},
                "gini_cutoff": gini_cutoff,
            }
        )
        self.side = side
        self.next_agent = 0
        self._gini = None

    def register(self, agent: SugarAgent) -> None:
        self.s_g["agent_grid"][agent.position] = agent.id
        self.s_g["wealth"][agent.id] = agent.wealth
        self._gini = None

    def gini(self) -> float:
        if self._gini is None:
            try:
                self._gini = gini(self.s_g["wealth"].values())
            except UndefinedStatisticError:
                self._gini = 0.0
        return self._gini

    def delta_g(self, elapsed, x_b_micro, parent_view):
        grid = self.s_g["agent_grid"]
        sugar = self.s_g["sugar_grid"]
        wealth = self.s_g["wealth"]
        for x in x_b_micro:
            if x[0] == CELL:
                _, (r, c), amount = x
                sugar[r][c] = amount
                continue
            _, agent_id, last, new, alive, w = x
            if grid.get(last) == agent_id:
                del grid[last]
            self._gini = None
            if alive:
                grid[new] = agent_id
                wealth[agent_id] = w
                if new != last:
                    self.request(StructureChange.disconnect((agent_id, "out"), (cell_id(last), "in")))
                    self.request(StructureChange.connect((agent_id, "out"), (cell_id(new), "in")))
            else:
                del wealth[agent_id]
                if new != last:
                    self.request(StructureChange.disconnect((agent_id, "out"), (cell_id(last), "in")))
                    self.request(StructureChange.connect((agent_id, "out"), (cell_id(new), "in")))
                self.spawn()
        return None

    def spawn(self) -> SugarAgent:
        pos = random_free_cell(self.rng, self.side, self.s_g["agent_grid"])
        agent = draw_agent(self.rng, f"a{self.next_agent}", pos, self.s_g["gini_cutoff"])
        self.next_agent += 1
        self.register(agent)
        self.request(StructureChange.add_atomic(self.coupled.id, agent))
        self.request(StructureChange.connect((agent.id, "out"), (cell_id(pos), "in")))
        return agent

    def v_down(self, prop, *params):
        if prop == MAX_SUGAR_NEXT_CELL:
            position, vision = params
            return max_sugar_next_cell(
                self.s_g["sugar_grid"], self.s_g["agent_grid"], position, vision, self.rng
            )
        if prop == GINI:
            return self.gini()
        raise QueryError(f"unknown property {prop!r}")


def check(p: dict) -> dict:
    check_range(p, "gini_cutoff", 0.0, 1.0)
    check_range(p, "side", 1)
    check_range(p, "agents", 0, p["side"] ** 2)
    return p


def build(params: dict | None = None, seed: int = 0) -> Coupled:
    p = check(resolve_params(DEFAULTS, params))
    side = p["side"]
    capacity = generate_terrain(side)
    macro = SugarscapeMacro(capacity, p["gini_cutoff"])
    root = SugarscapeModel("sugarscape", macro)
    for r in range(side):
        for c in range(side):
            root.add(SugarCell(cell_id((r, c)), (r, c), capacity[r][c]))
    stream = RngStream(seed, ("build", "sugarscape"))
    for _ in range(p["agents"]):
        pos = random_free_cell(stream, side, macro.s_g["agent_grid"])
        agent = draw_agent(stream, f"a{macro.next_agent}", pos, p["gini_cutoff"])
        macro.next_agent += 1
        macro.register(agent)
        root.add(agent)
        root.connect((agent.id, "out"), (cell_id(pos), "in"))
    return root


def run(params=None, seed=0, t_end=None, sample_times=None, trace=None, macro_enabled=True) -> RunResult:
    p = resolve_params(DEFAULTS, params)
    t_end = p["t_end"] if t_end is None else float(t_end)
    if t_end < 0:
        raise ConfigurationError("t_end must be non-negative")
    root = build(p, seed)
    sim = Simulator(root, seed, trace=trace, macro_enabled=macro_enabled)
    grid = uniform_grid(t_end) if sample_times is None else sample_times
    summary = sim.run_until(t_end, {"gini": lambda _s: root.macro.gini()}, grid)
    series: dict[str, TimeSeries] = summary.series
    values = series["gini"].values
    tail = values[-max(len(values) // 4, 1):]
    return RunResult(
        series,
        {"gini": values[-1] if values else None, "late_gini": sum(tail) / len(tail) if tail else None},
        sim.steps,
    )
