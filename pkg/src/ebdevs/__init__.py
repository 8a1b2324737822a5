"""Discrete-event simulation with micro-macro feedback."""

from .dynstruct import StructureChange
from .kernel import (
    INFINITY,
    Atomic,
    Coupled,
    Direction,
    EventReport,
    Message,
    PortRef,
    Simulator,
    TraceSummary,
    initialize,
    select_imminent,
)
from .macro import MacroAccess, MacroQuery, MacroState
from .rng import RngStream, WeightedPool, derive_seed

__all__ = [
    "INFINITY",
    "Atomic",
    "Coupled",
    "Direction",
    "EventReport",
    "MacroAccess",
    "MacroQuery",
    "MacroState",
    "Message",
    "PortRef",
    "RngStream",
    "Simulator",
    "StructureChange",
    "TraceSummary",
    "WeightedPool",
    "derive_seed",
    "initialize",
    "select_imminent",
]
