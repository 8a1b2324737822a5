"""Shared plumbing for the bundled models."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigurationError
from ..stats import TimeSeries


@dataclass
class RunResult:
    series: dict[str, TimeSeries]
    final: dict = field(default_factory=dict)
    steps: int = 0


def resolve_params(defaults: dict, params: dict | None) -> dict:
    """Merge ``params`` over ``defaults``, coercing each value to the default's type."""
    out = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise ConfigurationError(f"unknown parameter {key!r}; expected one of {sorted(defaults)}")
        kind = type(defaults[key])
        try:
            if kind is bool and isinstance(value, str):
                value = value.strip().lower() in ("1", "true", "yes", "on")
            elif kind is int and isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            out[key] = kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"parameter {key!r}: cannot read {value!r} as {kind.__name__}") from exc
    return out


def check_range(params: dict, key: str, low=None, high=None) -> None:
    v = params[key]
    if (low is not None and v < low) or (high is not None and v > high):
        raise ConfigurationError(f"parameter {key}={v} outside [{low}, {high}]")
