"""Dependency-free SVG line charts for mean curves and confidence bands."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass
class Line:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str = "#000000"
    dashed: bool = False
    width: float = 1.5


def nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        raise ValueError("non-finite axis range")
    if hi - lo <= 1e-9 * max(1.0, abs(lo), abs(hi)):
        # flat data: open a unit range around it
        mid = (lo + hi) / 2
        lo, hi = mid - 1.0, mid + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(lines, title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 720, height: int = 440, comment: str | None = None) -> str:
    """Render ``lines`` as an SVG document string.

    Output depends only on the inputs, so identical data gives identical
    bytes.
    """
    lines = list(lines)
    if not lines:
        raise ValueError("nothing to plot")
    xs = np.concatenate([np.asarray(l.x, dtype=float) for l in lines])
    ys = np.concatenate([np.asarray(l.y, dtype=float) for l in lines])
    xt = nice_ticks(float(xs.min()), float(xs.max()))
    yt = nice_ticks(float(ys.min()), float(ys.max()))
    x0, x1 = xt[0], xt[-1]
    y0, y1 = yt[0], yt[-1]

    left, right, top, bottom = 70, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if comment:
        out.append(f"<!-- {escape(comment.replace('--', '- -'))} -->")
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    )
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    for t in xt:
        out.append(f'<line x1="{_fmt(px(t))}" y1="{top + ph}" x2="{_fmt(px(t))}" y2="{top + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in yt:
        out.append(f'<line x1="{left - 5}" y1="{_fmt(py(t))}" x2="{left}" y2="{_fmt(py(t))}" stroke="#444"/>')
        out.append(f'<line x1="{left}" y1="{_fmt(py(t))}" x2="{left + pw}" y2="{_fmt(py(t))}" stroke="#eee"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end">{t:g}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
        )
    for ln in lines:
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(ln.x, ln.y))
        dash = ' stroke-dasharray="6,4"' if ln.dashed else ""
        out.append(f'<polyline fill="none" stroke="{ln.color}" stroke-width="{ln.width}"{dash} points="{pts}"/>')
    ly = top + 10
    for ln in lines:
        if not ln.label:
            continue
        dash = ' stroke-dasharray="6,4"' if ln.dashed else ""
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{ln.color}" stroke-width="{ln.width}"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(ln.label)}</text>')
        ly += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def band_chart(band, title: str = "", ylabel: str = "CplXLCoh", comment: str | None = None) -> str:
    """Mean curve solid, pointwise 95% limits dashed."""
    return line_chart(
        [
            Line(band.grid, band.mean, "mean", "#000000", False, 2.0),
            Line(band.grid, band.lower, "95% CI", "#555555", True, 1.2),
            Line(band.grid, band.upper, "", "#555555", True, 1.2),
        ],
        title=title, xlabel="day", ylabel=ylabel, comment=comment,
    )


def cluster_means_chart(grid, cluster_means: dict, overall, title: str = "", comment: str | None = None) -> str:
    """One line per cluster mean function, overall mean in bold black."""
    lines = [
        Line(grid, m, f"cluster {c}", PALETTE[(c - 1) % len(PALETTE)], False, 1.5)
        for c, m in cluster_means.items()
    ]
    lines.append(Line(grid, overall, "overall mean", "#000000", False, 2.5))
    return line_chart(lines, title=title, xlabel="day", ylabel="standardized CplXLCoh", comment=comment)
