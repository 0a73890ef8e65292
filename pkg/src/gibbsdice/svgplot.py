"""Scatter-plus-model-curve figure for xxy families, written as plain SVG.

Measured ``f_xx`` against ``s_y / s_x`` with error bars, overlaid with the
fitted ``p_xx`` curve of each family.  Output is deterministic text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .estimation import XxyObservation
from .model import Normalization, xxy_pxx_ratio

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=64, right=24, top=24, bottom=56)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
CURVE_POINTS = 200


@dataclass(frozen=True)
class Series:
    label: str
    observations: tuple[XxyObservation, ...]
    beta: float


def vertical_error(o: XxyObservation, style: str = "caption") -> float | None:
    """Standard deviation used for the f_xx error bar.

    ``"caption"``: sqrt(f_xx / n_xx), undefined for n_xx = 0 (returns None).
    ``"binomial"``: sqrt(f (1 - f) / N).
    """
    f = o.fxx
    if style == "binomial":
        return math.sqrt(f * (1.0 - f) / o.N)
    if o.nxx == 0:
        return None
    return math.sqrt(f / o.nxx)


def horizontal_error(ratio: float, epsilon: float) -> float:
    """Standard deviation of s_y/s_x when both sides carry relative error epsilon."""
    return epsilon * math.sqrt(2.0) * ratio


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_figure(
    series: Sequence[Series],
    epsilon: float = 0.05,
    error_style: str = "caption",
    norm=Normalization.GEOMETRIC_MEAN,
) -> str:
    if not series or not any(s.observations for s in series):
        raise ValueError("nothing to plot: no observations")
    ratios = [o.ratio for s in series for o in s.observations]
    x_max = max(1.0, max(r + horizontal_error(r, epsilon) for r in ratios)) * 1.05
    x_max = math.ceil(x_max * 2.0) / 2.0

    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + plot_w * x / x_max

    def sy(y):
        return MARGIN["top"] + plot_h * (1.0 - y)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    # axes, ticks
    x0, y0 = sx(0.0), sy(0.0)
    out.append(
        f'<path class="axes" d="M{_f(x0)},{_f(sy(1.0))} V{_f(y0)} H{_f(sx(x_max))}" '
        f'stroke="black" fill="none"/>'
    )
    step = 0.5 if x_max <= 4 else 1.0
    for i in range(int(round(x_max / step)) + 1):
        x = i * step
        out.append(f'<line x1="{_f(sx(x))}" y1="{_f(y0)}" x2="{_f(sx(x))}" y2="{_f(y0 + 5)}" stroke="black"/>')
        out.append(f'<text x="{_f(sx(x))}" y="{_f(y0 + 18)}" text-anchor="middle">{x:g}</text>')
    for i in range(6):
        y = i / 5
        out.append(f'<line x1="{_f(x0 - 5)}" y1="{_f(sy(y))}" x2="{_f(x0)}" y2="{_f(sy(y))}" stroke="black"/>')
        out.append(f'<text x="{_f(x0 - 8)}" y="{_f(sy(y) + 4)}" text-anchor="end">{y:.1f}</text>')
    out.append(
        f'<text x="{_f(MARGIN["left"] + plot_w / 2)}" y="{HEIGHT - 14}" text-anchor="middle">'
        f"side ratio s_y / s_x</text>"
    )
    out.append(
        f'<text transform="translate(16,{_f(MARGIN["top"] + plot_h / 2)}) rotate(-90)" '
        f'text-anchor="middle">f_xx, p_xx</text>'
    )

    missing_bar = False
    legend = []
    for idx, s in enumerate(series):
        color = COLORS[idx % len(COLORS)]
        label = escape(s.label)
        grid = np.linspace(x_max / CURVE_POINTS, x_max, CURVE_POINTS)
        p = xxy_pxx_ratio(grid, s.beta, norm)
        pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(grid, p))
        out.append(
            f'<polyline class="model-curve" data-series="{label}" data-beta="{s.beta:.6g}" '
            f'points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for o in s.observations:
            r, f = o.ratio, o.fxx
            dx = horizontal_error(r, epsilon)
            out.append(
                f'<line class="xbar" x1="{_f(sx(max(r - dx, 0.0)))}" y1="{_f(sy(f))}" '
                f'x2="{_f(sx(r + dx))}" y2="{_f(sy(f))}" stroke="{color}"/>'
            )
            dy = vertical_error(o, error_style)
            if dy is None:
                missing_bar = True
            else:
                out.append(
                    f'<line class="ybar" x1="{_f(sx(r))}" y1="{_f(sy(min(f + dy, 1.0)))}" '
                    f'x2="{_f(sx(r))}" y2="{_f(sy(max(f - dy, 0.0)))}" stroke="{color}"/>'
                )
            out.append(
                f'<circle class="marker" data-series="{label}" cx="{_f(sx(r))}" cy="{_f(sy(f))}" '
                f'r="3" fill="{color}"/>'
            )
        legend.append((color, f"{label} (beta = {s.beta:.3g})"))
    if missing_bar:
        legend.append((None, "no vertical bar: n_xx = 0"))

    lx = sx(x_max) - 210
    for i, (color, text) in enumerate(legend):
        ly = MARGIN["top"] + 14 + 18 * i
        if color:
            out.append(f'<circle cx="{_f(lx)}" cy="{_f(ly - 4)}" r="3" fill="{color}"/>')
        out.append(f'<text class="legend" x="{_f(lx + 10)}" y="{_f(ly)}">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
