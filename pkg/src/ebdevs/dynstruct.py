"""Runtime structural changes.

Changes are plain values.  Models queue them during a step (a macro state via
:meth:`MacroState.request`, an atomic by asking its parent through
``request_structure_change``); the simulator applies the queue in request
order once the step's transitions and global transitions are done.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .errors import StructureError


class ChangeKind(Enum):
    ADD_ATOMIC = "add_atomic"
    REMOVE_ATOMIC = "remove_atomic"
    CONNECT = "connect"
    DISCONNECT = "disconnect"
    MOVE = "move"


@dataclass(frozen=True)
class StructureChange:
    kind: ChangeKind
    payload: Any
    parent: Any = None

    @classmethod
    def add_atomic(cls, parent_id, model_or_factory: Any | Callable[[], Any]) -> "StructureChange":
        return cls(ChangeKind.ADD_ATOMIC, model_or_factory, parent_id)

    @classmethod
    def remove_atomic(cls, model_id) -> "StructureChange":
        return cls(ChangeKind.REMOVE_ATOMIC, model_id)

    @classmethod
    def connect(cls, src, dst, parent_id=None) -> "StructureChange":
        """``src`` and ``dst`` are PortRefs or ``(model_id, port)`` pairs."""
        return cls(ChangeKind.CONNECT, (src, dst), parent_id)

    @classmethod
    def disconnect(cls, src, dst, parent_id=None) -> "StructureChange":
        return cls(ChangeKind.DISCONNECT, (src, dst), parent_id)

    @classmethod
    def move(cls, model_id, new_parent_id) -> "StructureChange":
        return cls(ChangeKind.MOVE, model_id, new_parent_id)


@dataclass
class AppliedReport:
    added: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    connected: int = 0
    disconnected: int = 0

    @property
    def count(self) -> int:
        return len(self.added) + len(self.removed) + self.connected + self.disconnected


def _model_id(ref):
    return ref.model_id if hasattr(ref, "model_id") else ref[0]


def apply_changes(sim, changes) -> AppliedReport:
    """Apply ``changes`` to a running simulator, in order."""
    report = AppliedReport()
    for change in changes:
        kind = change.kind
        if kind is ChangeKind.ADD_ATOMIC:
            model = change.payload() if callable(change.payload) else change.payload
            sim._attach_atomic(change.parent, model)
            report.added.append(model.id)
        elif kind is ChangeKind.REMOVE_ATOMIC:
            sim._detach_atomic(change.payload)
            report.removed.append(change.payload)
        elif kind is ChangeKind.CONNECT:
            src, dst = change.payload
            owner = sim._coupling_owner(_model_id(src), _model_id(dst), change.parent)
            owner._link(src, dst)
            report.connected += 1
        elif kind is ChangeKind.DISCONNECT:
            src, dst = change.payload
            owner = sim._coupling_owner(_model_id(src), _model_id(dst), change.parent)
            owner._unlink(src, dst)
            report.disconnected += 1
        elif kind is ChangeKind.MOVE:
            raise StructureError("moving a model between coupled parents is not supported")
        else:
            raise StructureError(f"unknown change kind {kind!r}")
    if report.count:
        sim._invalidate_routes()
    return report
