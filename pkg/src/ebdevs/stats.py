"""Observables and their analysis."""

from __future__ import annotations

import bisect
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ShapeError, UndefinedStatisticError


@dataclass
class TimeSeries:
    """Ordered ``(time, value)`` samples with strictly increasing times."""

    label: str
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def append(self, t: float, value: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"{self.label}: time {t} not after {self.times[-1]}")
        self.times.append(float(t))
        self.values.append(float(value))

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.values))

    def at(self, t: float) -> float:
        """Last observation at or before ``t``."""
        i = bisect.bisect_right(self.times, t) - 1
        if i < 0:
            raise ValueError(f"{self.label}: no sample at or before t={t}")
        return self.values[i]

    def resample(self, grid: Iterable[float]) -> "TimeSeries":
        """Last-observation-carried-forward onto ``grid``."""
        out = TimeSeries(self.label)
        for t in grid:
            out.append(t, self.at(t))
        return out


def uniform_grid(t_end: float, points: int = 200) -> list[float]:
    """``points + 1`` equally spaced times from 0 to ``t_end`` inclusive."""
    step = t_end / points
    return [i * step for i in range(points + 1)]


def gini(values: Iterable[float]) -> float:
    """Population Gini index in O(n log n).

    Equal to ``sum_i sum_j |x_i - x_j| / (2 n^2 mean)``; computed on the
    sorted values with rank weights ``2i - n - 1``.
    """
    xs = sorted(float(v) for v in values)
    n = len(xs)
    if n == 0:
        raise UndefinedStatisticError("Gini index of an empty sequence")
    if xs[0] < 0:
        raise ValueError("Gini index needs non-negative values")
    total = math.fsum(xs)
    if total <= 0:
        raise UndefinedStatisticError("Gini index of an all-zero sequence")
    num = math.fsum((2 * i - n - 1) * x for i, x in enumerate(xs, start=1))
    return max(num / (n * total), 0.0)


def degree_histogram(degrees: Iterable[int]) -> tuple[dict[int, int], list[tuple[int, float]]]:
    """Counts per degree and the complementary CDF ``P(D >= k)``.

    The CCDF is evaluated at every observed degree, in increasing order.
    """
    counts = Counter()
    for d in degrees:
        if d < 0:
            raise ValueError(f"negative degree {d}")
        counts[int(d)] += 1
    hist = dict(sorted(counts.items()))
    n = sum(hist.values())
    ccdf = []
    remaining = n
    for k, c in hist.items():
        ccdf.append((k, remaining / n))
        remaining -= c
    return hist, ccdf


def counts_from_ccdf(ccdf: Sequence[tuple[int, float]], n: int) -> dict[int, int]:
    """Invert :func:`degree_histogram`'s CCDF back to counts."""
    out = {}
    for i, (k, frac) in enumerate(ccdf):
        nxt = ccdf[i + 1][1] if i + 1 < len(ccdf) else 0.0
        out[k] = int(round((frac - nxt) * n))
    return out


def loglog_slope(
    ccdf: Iterable[tuple[float, float]], fit_range: tuple[float, float]
) -> tuple[float, float]:
    """OLS slope and r² of ``ln(fraction)`` against ``ln(degree)``.

    Only points with ``fit_range[0] <= degree <= fit_range[1]`` and positive
    degree and fraction are used.
    """
    lo, hi = fit_range
    pts = [(k, f) for k, f in ccdf if lo <= k <= hi and k > 0 and f > 0]
    if len(pts) < 5:
        raise FitError(f"need at least 5 points in {fit_range}, got {len(pts)}")
    x = np.log([k for k, _ in pts])
    y = np.log([f for _, f in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def distinct_cultures(cultures: Iterable[Sequence[int]]) -> int:
    """Number of distinct culture vectors under exact equality."""
    seen = set()
    width = None
    for c in cultures:
        t = tuple(c)
        if width is None:
            width = len(t)
        elif len(t) != width:
            raise ShapeError(f"culture of length {len(t)}, expected {width}")
        seen.add(t)
    return len(seen)
