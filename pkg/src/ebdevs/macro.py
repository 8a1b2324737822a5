"""Macro level of a coupled model.

A coupled model may carry a :class:`MacroState`.  Atomic components feed it
with upward values (``send_up``); after every simulator step the collected
batch is handed to :meth:`MacroState.delta_g`, the global transition.
Components read the macro state back through :meth:`MacroState.v_down`,
which they reach via a :class:`MacroAccess` handed to their transitions.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any, NamedTuple

from .errors import MacroAccessError, QueryError, SimulationError


class MacroQuery(NamedTuple):
    property: Any
    params: tuple = ()


class MacroState:
    """Macro state ``s_g`` plus global transition and downward information.

    Subclasses set :attr:`properties` to the closed set of tags their
    :meth:`v_down` answers, override :meth:`delta_g` and :meth:`v_down`, and
    keep everything they consider macro state inside ``self.s_g``.

    While bound to a simulator a macro state has its own random stream
    (``self.rng``), the current clock (``self.now``) and may queue structural
    changes with :meth:`request`.
    """

    properties: frozenset = frozenset()

    def __init__(self, s_g: Any = None):
        self.s_g = s_g
        self.last_global_time = 0.0
        self.rng = None
        self.coupled = None
        self._sim = None

    # hooks ---------------------------------------------------------------

    def delta_g(self, elapsed: float, x_b_micro: list, parent_view: Any) -> Any:
        """Consume one batch of upward values; return an upward value or None."""
        return None

    def v_down(self, prop, *params) -> Any:
        raise QueryError(f"{type(self).__name__} answers no queries")

    def view(self) -> Any:
        """What child coupled models see as their parent's macro state."""
        return self.s_g

    # plumbing ------------------------------------------------------------

    def bind(self, sim, coupled, rng) -> None:
        self._sim = sim
        self.coupled = coupled
        self.rng = rng
        self.last_global_time = sim.clock

    @property
    def now(self) -> float:
        return self._sim.clock

    def request(self, change) -> None:
        """Queue a structural change; it is applied at the end of the step."""
        if self._sim is None:
            raise SimulationError("macro state is not bound to a simulator")
        self._sim.request(change)


def query_down(macro: MacroState, q: MacroQuery) -> Any:
    if q.property not in macro.properties:
        raise QueryError(f"{type(macro).__name__} does not answer {q.property!r}")
    return macro.v_down(q.property, *q.params)


def deliver_yup(
    macro: MacroState,
    elapsed: float,
    batch: Sequence,
    parent_view: Any = None,
    now: float | None = None,
) -> Any:
    """Run one global transition over a non-empty batch of upward values."""
    if not batch:
        raise ValueError("deliver_yup needs a non-empty batch")
    try:
        y = macro.delta_g(elapsed, list(batch), parent_view)
    except Exception as exc:
        owner = getattr(macro.coupled, "id", None)
        raise SimulationError(f"global transition of {owner!r} failed at t={now}: {exc}") from exc
    macro.last_global_time = macro.last_global_time + elapsed if now is None else now
    return y


class MacroAccess:
    """Read-only handle on a parent's macro state, valid during one transition."""

    __slots__ = ("_macro", "_open")

    def __init__(self, macro: MacroState | None):
        self._macro = macro
        self._open = False

    def query(self, prop, *params) -> Any:
        if not self._open:
            raise MacroAccessError("macro access used outside of a transition")
        macro = self._macro
        if macro is None:
            raise QueryError("parent coupled model has no macro state")
        if prop not in macro.properties:
            raise QueryError(f"{type(macro).__name__} does not answer {prop!r}")
        return macro.v_down(prop, *params)

    __call__ = query
