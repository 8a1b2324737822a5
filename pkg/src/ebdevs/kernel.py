"""Classic DEVS abstract simulator with EB-DEVS micro-macro hooks.

Models are built from :class:`Atomic` and :class:`Coupled` objects and run by
a :class:`Simulator`.  One step executes the imminent atomic: its output is
routed along the couplings, its internal transition runs, every receiver runs
its external transition, upward values are handed to the parents' macro
states and finally any queued structural change is applied.

Ties between simultaneous events are broken by a fixed select order: the
order in which components were added (depth first), with models added at run
time appended at the end.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, TextIO

from . import dynstruct
from .errors import (
    ConfigurationError,
    CouplingError,
    LegitimacyError,
    ModelError,
    RoutingError,
    StructureError,
)
from .macro import MacroAccess, MacroState, deliver_yup
from .rng import RngStream
from .stats import TimeSeries

INFINITY = math.inf

INT = "INT"
EXT = "EXT"


class Direction(str, Enum):
    IN = "in"
    OUT = "out"


@dataclass(frozen=True, slots=True)
class PortRef:
    model_id: Any
    port: str
    direction: Direction


@dataclass(frozen=True, slots=True)
class Message:
    source: PortRef
    payload: Any
    port: str = "in"  # receiving port


_NO_VALUE = object()


class Atomic:
    """Base class for atomic models.

    Override :meth:`output`, :meth:`delta_int`, :meth:`delta_ext` and
    :meth:`time_advance`; draw randomness from ``self.rng``.  Transitions get a
    :class:`~ebdevs.macro.MacroAccess` for the parent's macro state and may
    call :meth:`send_up` once per transition.
    """

    in_ports: tuple = ("in",)
    out_ports: tuple = ("out",)
    dynamic_ports = False

    def __init__(self, model_id, state: Any = None):
        self.id = model_id
        self.state = state
        self.parent: Coupled | None = None
        self.rng: RngStream | None = None
        self.last_event_time = 0.0
        self._yup = _NO_VALUE
        self._restructure = False

    def __repr__(self):
        return f"{type(self).__name__}({self.id!r})"

    def start(self) -> None:
        """Called once when the model enters a simulation, after ``rng`` is set."""

    def output(self) -> dict | None:
        """Port -> payload map emitted just before each internal transition."""
        return None

    def delta_int(self, macro: MacroAccess) -> None:
        pass

    def delta_ext(self, elapsed: float, inputs: list[Message], macro: MacroAccess) -> None:
        pass

    def time_advance(self) -> float:
        return INFINITY

    def send_up(self, value) -> None:
        if value is None:
            raise ModelError(f"{self.id!r}: upward value must not be None")
        if self._yup is not _NO_VALUE:
            raise ModelError(f"{self.id!r} sent two upward values in one transition")
        self._yup = value

    def take_yup(self):
        value = self._yup
        if value is _NO_VALUE:
            return None
        self._yup = _NO_VALUE
        return value

    def request_structure_change(self) -> None:
        """Ask the parent coupled model to run ``on_structure_request``."""
        self._restructure = True

    def wants_structure_change(self) -> bool:
        flag = self._restructure
        self._restructure = False
        return flag

    def has_in_port(self, port: str) -> bool:
        return self.dynamic_ports or port in self.in_ports

    def has_out_port(self, port: str) -> bool:
        return self.dynamic_ports or port in self.out_ports


def _parse_ref(ref) -> tuple[Any, str, Direction | None]:
    if isinstance(ref, PortRef):
        return ref.model_id, ref.port, Direction(ref.direction)
    model_id, port = ref
    return model_id, port, None


class Coupled:
    """Container of components and couplings, optionally with a macro state."""

    in_ports: tuple = ()
    out_ports: tuple = ()

    def __init__(self, model_id, macro: MacroState | None = None, *, in_ports=None, out_ports=None):
        self.id = model_id
        self.macro = macro
        self.parent: Coupled | None = None
        self.components: dict = {}
        if in_ports is not None:
            self.in_ports = tuple(in_ports)
        if out_ports is not None:
            self.out_ports = tuple(out_ports)
        self._links: dict[tuple, list[tuple]] = {}
        self._touching: dict = {}
        self._sim: Simulator | None = None

    def __repr__(self):
        return f"{type(self).__name__}({self.id!r}, {len(self.components)} components)"

    def has_in_port(self, port: str) -> bool:
        return port in self.in_ports

    def has_out_port(self, port: str) -> bool:
        return port in self.out_ports

    def add(self, model):
        if self._sim is not None:
            raise StructureError("model is running; queue StructureChange.add_atomic instead")
        if model.id in self.components or model.id == self.id:
            raise ConfigurationError(f"duplicate model id {model.id!r}")
        model.parent = self
        self.components[model.id] = model
        return model

    def connect(self, src, dst) -> None:
        """Add a coupling; ``src``/``dst`` are PortRefs or ``(model_id, port)``."""
        if self._sim is not None:
            raise StructureError("model is running; queue StructureChange.connect instead")
        self._link(src, dst)

    def on_structure_request(self, model: Atomic) -> Iterable:
        """Structural changes to apply when ``model`` asks for them."""
        return ()

    def _check(self, src, dst) -> tuple[tuple, tuple]:
        s_id, s_port, s_dir = _parse_ref(src)
        d_id, d_port, d_dir = _parse_ref(dst)
        comps = self.components
        if s_id == self.id:
            if s_dir not in (None, Direction.IN):
                raise CouplingError(f"{self.id!r}.{s_port}: coupled output used as a source")
            if not self.has_in_port(s_port):
                raise CouplingError(f"{self.id!r} has no input port {s_port!r}")
            if d_id == self.id:
                raise CouplingError("direct input-to-output pass-through is not supported")
        elif s_id in comps:
            if s_dir not in (None, Direction.OUT):
                raise CouplingError(f"{s_id!r}.{s_port}: input port used as a source")
            if not comps[s_id].has_out_port(s_port):
                raise CouplingError(f"{s_id!r} has no output port {s_port!r}")
        else:
            raise StructureError(f"{s_id!r} is not part of {self.id!r}")
        if d_id == self.id:
            if d_dir not in (None, Direction.OUT):
                raise CouplingError(f"{self.id!r}.{d_port}: coupled input used as a destination")
            if not self.has_out_port(d_port):
                raise CouplingError(f"{self.id!r} has no output port {d_port!r}")
        elif d_id in comps:
            if d_dir not in (None, Direction.IN):
                raise CouplingError(f"{d_id!r}.{d_port}: output port used as a destination")
            if not comps[d_id].has_in_port(d_port):
                raise CouplingError(f"{d_id!r} has no input port {d_port!r}")
            if d_id == s_id:
                raise CouplingError(f"self-loop on {s_id!r}")
        else:
            raise StructureError(f"{d_id!r} is not part of {self.id!r}")
        return (s_id, s_port), (d_id, d_port)

    def _link(self, src, dst) -> None:
        s, d = self._check(src, dst)
        dests = self._links.setdefault(s, [])
        if d in dests:
            return
        dests.append(d)
        for mid in (s[0], d[0]):
            self._touching.setdefault(mid, set()).add((s, d))

    def _unlink(self, src, dst) -> None:
        s_id, s_port, _ = _parse_ref(src)
        d_id, d_port, _ = _parse_ref(dst)
        s, d = (s_id, s_port), (d_id, d_port)
        dests = self._links.get(s)
        if not dests or d not in dests:
            raise StructureError(f"no coupling {s} -> {d} in {self.id!r}")
        dests.remove(d)
        if not dests:
            del self._links[s]
        for mid in (s_id, d_id):
            pairs = self._touching.get(mid)
            if pairs is not None:
                pairs.discard((s, d))

    def _purge(self, model_id) -> int:
        """Drop every coupling touching ``model_id``; return how many."""
        pairs = self._touching.pop(model_id, set())
        for s, d in pairs:
            dests = self._links.get(s)
            if dests and d in dests:
                dests.remove(d)
                if not dests:
                    del self._links[s]
            other = d[0] if s[0] == model_id else s[0]
            if other in self._touching:
                self._touching[other].discard((s, d))
        return len(pairs)

    def couplings(self) -> list[tuple[PortRef, PortRef]]:
        out = []
        for (s_id, s_port), dests in self._links.items():
            s_dir = Direction.IN if s_id == self.id else Direction.OUT
            for d_id, d_port in dests:
                d_dir = Direction.OUT if d_id == self.id else Direction.IN
                out.append((PortRef(s_id, s_port, s_dir), PortRef(d_id, d_port, d_dir)))
        return out


def select_imminent(imminent_ids: Iterable, order) -> Any:
    """Tie-breaking: the imminent id ranked first by ``order``.

    ``order`` is either a sequence (rank = position) or a mapping id -> rank.
    """
    ids = list(imminent_ids)
    if not ids:
        raise ValueError("select_imminent needs at least one imminent model")
    if isinstance(order, dict):
        rank = order
    else:
        rank = {mid: i for i, mid in enumerate(order)}
    return min(ids, key=rank.__getitem__)


@dataclass
class EventReport:
    time: float
    transitions: list[tuple[Any, str]] = field(default_factory=list)
    messages: int = 0
    yups: int = 0
    quiescent: bool = False


@dataclass
class TraceSummary:
    clock: float
    steps: int
    internal: int
    external: int
    series: dict[str, TimeSeries] = field(default_factory=dict)


class Simulator:
    """Runs one model tree.  Built by :func:`initialize`."""

    def __init__(
        self,
        root: Coupled,
        seed: int = 0,
        *,
        trace: TextIO | None = None,
        macro_enabled: bool = True,
    ):
        if not isinstance(root, Coupled):
            raise ConfigurationError("the root model must be a Coupled model")
        self.root = root
        self.seed = seed
        self.clock = 0.0
        self.trace = trace
        self.macro_enabled = macro_enabled
        self._models: dict = {}
        self._atomics: dict = {}
        self._coupled: dict = {}
        self._order: dict = {}
        self._counter = 0
        self._depth: dict = {}
        self._access: dict = {}
        self._t_next: dict = {}
        self._version: dict = {}
        self._heap: list = []
        self._pending: dict = {}
        self._routes: dict = {}
        self._queue: list = []
        self._mail: dict = {}
        self.steps = 0
        self.internal = 0
        self.external = 0

        self._register_coupled(root, 0)
        for c in self._coupled.values():
            if c.macro is not None:
                c.macro.bind(self, c, RngStream(seed, ("macro", c.id)))
            c._sim = self
        for model in list(self._atomics.values()):
            self._enter(model)

    # ------------------------------------------------------------------ setup

    def _claim(self, model) -> None:
        if model.id in self._models:
            raise ConfigurationError(f"duplicate model id {model.id!r}")
        self._models[model.id] = model
        self._order[model.id] = self._counter
        self._counter += 1

    def _register_coupled(self, coupled: Coupled, depth: int) -> None:
        self._claim(coupled)
        self._coupled[coupled.id] = coupled
        self._depth[coupled.id] = depth
        self._access[coupled.id] = MacroAccess(coupled.macro)
        for model in coupled.components.values():
            model.parent = coupled
            if isinstance(model, Coupled):
                self._register_coupled(model, depth + 1)
            elif isinstance(model, Atomic):
                self._claim(model)
                self._atomics[model.id] = model
            else:
                raise ConfigurationError(f"{model!r} is neither Atomic nor Coupled")

    def _enter(self, model: Atomic) -> None:
        model.rng = RngStream(self.seed, ("model", model.id))
        model.last_event_time = self.clock
        model.start()
        self._schedule(model)

    def _schedule(self, model: Atomic) -> None:
        ta = model.time_advance()
        if not ta >= 0:
            raise LegitimacyError(f"model {model.id!r}: time advance {ta} at t={self.clock}")
        mid = model.id
        t = self.clock + ta
        self._t_next[mid] = t
        ver = self._version.get(mid, 0) + 1
        self._version[mid] = ver
        if t < INFINITY:
            heapq.heappush(self._heap, (t, self._order[mid], ver, mid))

    # ------------------------------------------------------------- inspection

    @property
    def schedule(self) -> dict:
        """Model id -> next internal event time, one entry per atomic."""
        return dict(self._t_next)

    @property
    def atomics(self) -> dict:
        return self._atomics

    def model(self, model_id):
        return self._models[model_id]

    def next_time(self) -> float:
        heap = self._heap
        version = self._version
        while heap:
            _, _, ver, mid = heap[0]
            if version.get(mid) == ver:
                return heap[0][0]
            heapq.heappop(heap)
        return INFINITY

    # ---------------------------------------------------------------- routing

    def _resolve(self, model: Atomic, port: str) -> list:
        if not model.has_out_port(port):
            raise RoutingError(f"{model.id!r} has no output port {port!r}")
        result: list = []
        self._walk(model.parent, model.id, port, result)
        self._routes[(model.id, port)] = result
        return result

    def _walk(self, coupled: Coupled, src_id, port: str, result: list) -> None:
        for dst_id, dst_port in coupled._links.get((src_id, port), ()):
            if dst_id == coupled.id:
                if coupled.parent is not None:
                    self._walk(coupled.parent, coupled.id, dst_port, result)
                continue
            target = coupled.components.get(dst_id)
            if target is None:
                raise RoutingError(f"coupling to missing model {dst_id!r}")
            if isinstance(target, Coupled):
                self._walk(target, target.id, dst_port, result)
            else:
                result.append((dst_id, dst_port))

    def _invalidate_routes(self) -> None:
        self._routes.clear()

    # ------------------------------------------------------------------- step

    def _collect(self, model: Atomic) -> bool:
        y = model.take_yup()
        sent = y is not None
        if sent and self.macro_enabled:
            pid = model.parent.id
            box = self._mail.get(pid)
            if box is None:
                self._mail[pid] = box = []
            box.append((self._order[model.id], y))
        if model.wants_structure_change():
            self._queue.extend(model.parent.on_structure_request(model) or ())
        return sent

    def _flush_mail(self) -> int:
        mail = self._mail
        calls = 0
        depth = self._depth
        while mail:
            cid = max(mail, key=depth.__getitem__)
            batch = mail.pop(cid)
            coupled = self._coupled[cid]
            macro = coupled.macro
            if macro is None:
                continue
            batch.sort(key=lambda item: item[0])
            parent = coupled.parent
            parent_view = parent.macro.view() if parent is not None and parent.macro else None
            y = deliver_yup(
                macro,
                self.clock - macro.last_global_time,
                [v for _, v in batch],
                parent_view,
                now=self.clock,
            )
            calls += 1
            if y is not None and parent is not None:
                mail.setdefault(parent.id, []).append((self._order[cid], y))
        return calls

    def request(self, change) -> None:
        self._queue.append(change)

    def step(self) -> EventReport:
        """Execute the imminent event; report what happened."""
        heap = self._heap
        version = self._version
        while heap:
            t, _, ver, mid = heap[0]
            if version.get(mid) == ver:
                break
            heapq.heappop(heap)
        else:
            return EventReport(self.clock, quiescent=True)
        heapq.heappop(heap)
        self.clock = t
        model = self._atomics[mid]
        self.steps += 1

        inbox: dict = {}
        n_msgs = 0
        out = model.output()
        if out:
            routes = self._routes
            for port, payload in out.items():
                dests = routes.get((mid, port))
                if dests is None:
                    dests = self._resolve(model, port)
                if dests:
                    src = PortRef(mid, port, Direction.OUT)
                    for dst_id, dst_port in dests:
                        box = inbox.get(dst_id)
                        if box is None:
                            inbox[dst_id] = box = []
                        box.append(Message(src, payload, dst_port))
                        n_msgs += 1

        flags = []
        access = self._access[model.parent.id]
        access._open = True
        try:
            model.delta_int(access)
        finally:
            access._open = False
        self.internal += 1
        flags.append((mid, INT, self._collect(model)))
        pending = self._pending.pop(mid, None)
        if pending:
            access._open = True
            try:
                model.delta_ext(0.0, pending, access)
            finally:
                access._open = False
            self.external += 1
            flags.append((mid, EXT, self._collect(model)))
        model.last_event_time = t
        self._schedule(model)

        if inbox:
            order = self._order
            t_next = self._t_next
            atomics = self._atomics
            for rid in sorted(inbox, key=order.__getitem__):
                msgs = inbox[rid]
                if t_next[rid] == t:
                    # receiver is itself imminent: its internal transition goes first
                    self._pending.setdefault(rid, []).extend(msgs)
                    continue
                receiver = atomics[rid]
                acc = self._access[receiver.parent.id]
                acc._open = True
                try:
                    receiver.delta_ext(t - receiver.last_event_time, msgs, acc)
                finally:
                    acc._open = False
                self.external += 1
                flags.append((rid, EXT, self._collect(receiver)))
                receiver.last_event_time = t
                self._schedule(receiver)

        yups = sum(1 for _, _, f in flags if f)
        if self._mail:
            self._flush_mail()
        if self._queue:
            queue, self._queue = self._queue, []
            dynstruct.apply_changes(self, queue)
        if self.trace is not None:
            for rid, kind, flag in flags:
                self.trace.write(f"{t!r}\t{rid}\t{kind}\t{int(flag)}\n")
        return EventReport(t, [(rid, kind) for rid, kind, _ in flags], n_msgs, yups)

    def run_until(
        self,
        t_end: float,
        observers: dict | None = None,
        sample_times: Iterable[float] = (),
    ) -> TraceSummary:
        """Step while the next event time is <= ``t_end``.

        ``observers`` maps a label to ``f(simulator) -> float``; each is sampled
        at every time in ``sample_times`` (within the window), after all events
        at or before that time.
        """
        if t_end < self.clock:
            raise ValueError(f"t_end={t_end} is before the clock {self.clock}")
        observers = observers or {}
        series = {label: TimeSeries(label) for label in observers}
        samples = [s for s in sorted(sample_times) if self.clock <= s <= t_end] if observers else []
        k = 0
        steps0, int0, ext0 = self.steps, self.internal, self.external
        while True:
            nt = self.next_time()
            if k < len(samples) and samples[k] < nt:
                self.clock = samples[k]
                for label, fn in observers.items():
                    series[label].append(samples[k], fn(self))
                k += 1
            elif nt <= t_end:
                self.step()
            else:
                break
        if t_end < INFINITY:
            self.clock = t_end
        return TraceSummary(
            self.clock,
            self.steps - steps0,
            self.internal - int0,
            self.external - ext0,
            series,
        )

    # --------------------------------------------------------- dynamic structure

    def _attach_atomic(self, parent_id, model) -> None:
        parent = self._coupled.get(parent_id)
        if parent is None:
            raise StructureError(f"no coupled model {parent_id!r}")
        if not isinstance(model, Atomic):
            raise StructureError(f"{model!r} is not an atomic model")
        if model.id in self._models:
            raise StructureError(f"model id {model.id!r} already in use")
        model.parent = parent
        parent.components[model.id] = model
        self._claim(model)
        self._atomics[model.id] = model
        self._enter(model)

    def _detach_atomic(self, model_id) -> None:
        model = self._atomics.get(model_id)
        if model is None:
            raise StructureError(f"no atomic model {model_id!r}")
        parent = model.parent
        parent._purge(model_id)
        del parent.components[model_id]
        del self._atomics[model_id]
        del self._models[model_id]
        del self._t_next[model_id]
        # bump rather than drop the version so a reused id cannot revive stale heap entries
        self._version[model_id] += 1
        del self._order[model_id]
        self._pending.pop(model_id, None)

    def _coupling_owner(self, src_id, dst_id, hint=None) -> Coupled:
        if hint is not None:
            owner = self._coupled.get(hint)
            if owner is None:
                raise StructureError(f"no coupled model {hint!r}")
            return owner
        src = self._models.get(src_id)
        dst = self._models.get(dst_id)
        if src is None or dst is None:
            raise StructureError(f"dangling coupling {src_id!r} -> {dst_id!r}")
        if isinstance(src, Coupled) and dst.parent is src:
            return src
        if isinstance(dst, Coupled) and src.parent is dst:
            return dst
        if src.parent is not None and src.parent is dst.parent:
            return src.parent
        raise StructureError(f"{src_id!r} and {dst_id!r} share no coupled parent")


def initialize(root: Coupled, seed: int = 0, **kwargs) -> Simulator:
    """Build a simulator: clock 0, every atomic scheduled at ``ta(initial state)``."""
    return Simulator(root, seed, **kwargs)
