"""Exception hierarchy shared by the simulator and the models."""


class EBDevsError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EBDevsError):
    """Invalid model tree or experiment configuration."""


class LegitimacyError(EBDevsError):
    """A model returned a negative time advance."""


class RoutingError(EBDevsError):
    """A message was emitted on a port that does not exist."""


class CouplingError(EBDevsError):
    """A coupling violates the port direction rules."""


class StructureError(EBDevsError):
    """A structural change references missing models or is unsupported."""


class QueryError(EBDevsError):
    """Unknown or unanswerable downward-information query."""


class MacroAccessError(QueryError):
    """Macro access used outside of the transition it was handed to."""


class ModelError(EBDevsError):
    """A model broke its own contract (e.g. emitted two upward values)."""


class SimulationError(EBDevsError):
    """A hook raised during a step; wraps the original exception."""


class ParameterError(EBDevsError, ValueError):
    """Invalid distribution parameter."""


class SamplingError(EBDevsError, ValueError):
    """Weighted sampling asked for more items than the pool holds."""


class UndefinedStatisticError(EBDevsError, ValueError):
    """Statistic undefined for the given input (e.g. Gini of all zeros)."""


class FitError(EBDevsError, ValueError):
    """Too few points for a regression."""


class ShapeError(EBDevsError, ValueError):
    """Vectors of mismatched length."""


class PositionError(EBDevsError, IndexError):
    """Grid position out of bounds."""


class InstabilityError(EBDevsError, ArithmeticError):
    """Numerical integration left the admissible region."""


class PlotError(EBDevsError):
    """Inputs to the SVG plotter are empty or inconsistent."""
