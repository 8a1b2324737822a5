"""Minimal deterministic SVG line charts for harness CSV files."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import PlotError
from .harness import read_csv

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")

WIDTH, HEIGHT = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 180, 30, 50


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _label(x: float) -> str:
    return f"{x:.4g}"


def load_series(paths) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """(label, times, values) for every non-time column of every CSV."""
    series = []
    schema = None
    paths = [Path(p) for p in paths]
    if not paths:
        raise PlotError("no CSV files given")
    for path in paths:
        try:
            header, data = read_csv(path)
        except (OSError, ValueError) as exc:
            raise PlotError(f"cannot read {path}: {exc}") from exc
        if not header or header[0] != "time":
            raise PlotError(f"{path}: first column must be 'time'")
        if data.shape[0] == 0:
            raise PlotError(f"{path}: no data rows")
        if schema is None:
            schema = header
        elif header != schema:
            raise PlotError(f"{path}: columns {header} differ from {schema}")
        for j, name in enumerate(header[1:], start=1):
            label = name if len(paths) == 1 else f"{path.stem}:{name}"
            series.append((label, data[:, 0], data[:, j]))
    return series


def render_svg(series, title: str = "", x_label: str = "time", y_label: str = "value") -> str:
    if not series:
        raise PlotError("nothing to plot")
    t_all = np.concatenate([t for _, t, _ in series])
    v_all = np.concatenate([v for _, _, v in series])
    t0, t1 = float(t_all.min()), float(t_all.max())
    v0, v1 = float(v_all.min()), float(v_all.max())
    if t1 == t0:
        t1 = t0 + 1.0
    if v1 == v0:
        v0, v1 = v0 - 0.5, v1 + 0.5
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def sx(t):
        return LEFT + (t - t0) / (t1 - t0) * pw

    def sy(v):
        return TOP + ph - (v - v0) / (v1 - v0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for k in range(5):
        t = t0 + (t1 - t0) * k / 4
        v = v0 + (v1 - v0) * k / 4
        out.append(f'<text x="{_fmt(sx(t))}" y="{TOP + ph + 18}" text-anchor="middle">{_label(t)}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(sy(v) + 4)}" text-anchor="end">{_label(v)}</text>')
    out.append(
        f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(y_label)}</text>'
    )
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for i, (label, t, v) in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(t, v))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = TOP + 10 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot(csv_paths, out_svg, title: str = "") -> Path:
    """Write one SVG with a polyline per series; nothing is written on error."""
    svg = render_svg(load_series(csv_paths), title=title)
    out = Path(out_svg)
    out.write_text(svg, encoding="utf-8")
    return out
