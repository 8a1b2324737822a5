"""Schelling segregation on a square grid.

Agents of two colours sit on distinct cells.  Each agent wakes up after an
exponential delay (mean 0.5), asks the macro state whether it is happy and,
if not, asks for a random empty cell and moves there.  The macro state owns
the grid; agents never talk to each other directly.

``HT`` is the least fraction of like-coloured occupied neighbours an agent
accepts, so an agent is unhappy when the share of different-coloured
neighbours exceeds ``1 - HT``.
"""

from __future__ import annotations

import math

from ..errors import ConfigurationError, PositionError, QueryError
from ..kernel import Atomic, Coupled, Simulator
from ..macro import MacroState
from ..rng import RngStream
from ..stats import TimeSeries
from .base import RunResult, check_range, resolve_params

EMPTY, RED, GREEN = 0, 1, 2

HAPPINESS = "HAPPINESS"
RANDOM_EMPTY_CELL = "RANDOM_EMPTY_CELL"

DEFAULTS = {
    "N": 266,
    "HT": 0.5,
    "side": 20,
    "t_end": 40.0,
    "sample_every": 0.5,
}
OBSERVABLES = ("unhappy_fraction",)

_MOORE = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if dr or dc]


def happiness(grid, position, colour, threshold: float) -> bool:
    """Happy iff no occupied Moore neighbour, or different/occupied <= threshold."""
    rows = len(grid)
    cols = len(grid[0])
    r, c = position
    if not (0 <= r < rows and 0 <= c < cols):
        raise PositionError(f"{position} outside a {rows}x{cols} grid")
    occupied = different = 0
    for dr, dc in _MOORE:
        rr, cc = r + dr, c + dc
        if 0 <= rr < rows and 0 <= cc < cols:
            v = grid[rr][cc]
            if v != EMPTY:
                occupied += 1
                if v != colour:
                    different += 1
    return occupied == 0 or different <= threshold * occupied + 1e-9


class SegregationMacro(MacroState):
    """Grid of EMPTY/RED/GREEN plus an index of empty cells."""

    properties = frozenset({HAPPINESS, RANDOM_EMPTY_CELL})

    def __init__(self, side: int, tolerance: float):
        grid = [[EMPTY] * side for _ in range(side)]
        super().__init__({"grid": grid, "tolerance": tolerance})
        self.side = side
        self.empties = [(r, c) for r in range(side) for c in range(side)]
        self.where = {cell: i for i, cell in enumerate(self.empties)}

    def place(self, position, colour) -> None:
        self.s_g["grid"][position[0]][position[1]] = colour
        self._take(position)

    def _take(self, cell) -> None:
        i = self.where.pop(cell)
        last = self.empties.pop()
        if i < len(self.empties):
            self.empties[i] = last
            self.where[last] = i

    def _free(self, cell) -> None:
        self.where[cell] = len(self.empties)
        self.empties.append(cell)

    def delta_g(self, elapsed, x_b_micro, parent_view):
        grid = self.s_g["grid"]
        for last, new, colour in x_b_micro:
            if grid[new[0]][new[1]] != EMPTY:
                raise QueryError(f"move onto occupied cell {new}")
            grid[last[0]][last[1]] = EMPTY
            self._free(last)
            grid[new[0]][new[1]] = colour
            self._take(new)
        return None

    def v_down(self, prop, *params):
        if prop == HAPPINESS:
            position, colour = params
            return happiness(self.s_g["grid"], position, colour, self.s_g["tolerance"])
        if prop == RANDOM_EMPTY_CELL:
            if not self.empties:
                return None
            return self.rng.choice(self.empties)
        raise QueryError(f"unknown property {prop!r}")


class SegregationAgent(Atomic):
    in_ports = ()
    out_ports = ()

    def __init__(self, model_id, colour: int, position):
        super().__init__(model_id)
        self.colour = colour
        self.position = tuple(position)

    def time_advance(self):
        return self.rng.exponential(0.5)

    def delta_int(self, macro):
        if macro(HAPPINESS, self.position, self.colour):
            return
        cell = macro(RANDOM_EMPTY_CELL)
        if cell is None:
            return
        self.send_up((self.position, cell, self.colour))
        self.position = cell


def check(p: dict) -> dict:
    check_range(p, "HT", 0.0, 1.0)
    check_range(p, "side", 1)
    check_range(p, "N", 0, p["side"] ** 2)
    if not p["sample_every"] > 0:
        raise ConfigurationError("sample_every must be positive")
    return p


def build(params: dict | None = None, seed: int = 0) -> Coupled:
    p = check(resolve_params(DEFAULTS, params))
    side = p["side"]
    macro = SegregationMacro(side, 1.0 - p["HT"])
    root = Coupled("segregation", macro)
    cells = [(r, c) for r in range(side) for c in range(side)]
    RngStream(seed, ("build", "segregation")).shuffle(cells)
    reds = math.ceil(p["N"] / 2)
    for i in range(p["N"]):
        colour = RED if i < reds else GREEN
        macro.place(cells[i], colour)
        root.add(SegregationAgent(i, colour, cells[i]))
    return root


def unhappy_fraction(root: Coupled) -> float:
    agents = [m for m in root.components.values() if isinstance(m, SegregationAgent)]
    if not agents:
        return 0.0
    grid = root.macro.s_g["grid"]
    tol = root.macro.s_g["tolerance"]
    unhappy = sum(1 for a in agents if not happiness(grid, a.position, a.colour, tol))
    return unhappy / len(agents)


def run(params=None, seed=0, t_end=None, sample_times=None, trace=None, macro_enabled=True) -> RunResult:
    p = resolve_params(DEFAULTS, params)
    t_end = p["t_end"] if t_end is None else float(t_end)
    if t_end < 0:
        raise ConfigurationError("t_end must be non-negative")
    root = build(p, seed)
    sim = Simulator(root, seed, trace=trace, macro_enabled=macro_enabled)
    if sample_times is None:
        n = int(round(t_end / p["sample_every"]))
        sample_times = [k * p["sample_every"] for k in range(n + 1)]
    summary = sim.run_until(t_end, {"unhappy_fraction": unhappy_fraction_of(root)}, sample_times)
    series = summary.series["unhappy_fraction"]
    hit = next((t for t, v in series.points if v == 0), None)
    return RunResult(
        {"unhappy_fraction": series},
        {"unhappy_fraction": unhappy_fraction(root), "converged_at": hit},
        sim.steps,
    )


def unhappy_fraction_of(root):
    return lambda sim: unhappy_fraction(root)
