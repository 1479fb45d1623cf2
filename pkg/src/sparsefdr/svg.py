"""Minimal static SVG line charts (no plotting toolchain required)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape


@dataclass(frozen=True)
class PlotSeries:
    x_label: str
    y_label: str
    points: list[tuple[float, float]]
    fitted_line: tuple[float, float] | None = None  # (slope, intercept)
    title: str = ""


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def render_svg(series: PlotSeries, width: int = 640, height: int = 420) -> str:
    if not series.points:
        raise ValueError("cannot plot an empty series")
    xs = [p[0] for p in series.points]
    ys = [p[1] for p in series.points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if series.fitted_line is not None:
        a, b = series.fitted_line
        y0, y1 = min(y0, a * x0 + b, a * x1 + b), max(y1, a * x0 + b, a * x1 + b)
    # pad degenerate ranges so a single point still renders
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    padx = 0.05 * (x1 - x0)
    pady = 0.08 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

    left, right, top, bottom = 70, 20, 40, 55
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in sorted(series.points))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    for x, y in series.points:
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" fill="#1f77b4"/>')
    if series.fitted_line is not None:
        a, b = series.fitted_line
        xa, xb = min(xs), max(xs)
        out.append(
            f'<line x1="{sx(xa):.2f}" y1="{sy(a * xa + b):.2f}" x2="{sx(xb):.2f}" y2="{sy(a * xb + b):.2f}" '
            'stroke="#d62728" stroke-width="1.5" stroke-dasharray="6,4"/>'
        )
        sign = "+" if b >= 0 else "-"
        out.append(
            f'<text x="{left + pw - 5}" y="{top + 15}" text-anchor="end" fill="#d62728">'
            f"fit: y = {a:.4g} x {sign} {abs(b):.4g}</text>"
        )
    out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(series.x_label)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(series.y_label)}</text>'
    )
    if series.title:
        out.append(f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(series.title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fdr_trend_series(points, fit=None) -> PlotSeries:
    """Log-log FDR trend from (sparsity_ratio, fdr) pairs with positive fdr."""
    pts = [(math.log(r), math.log(f)) for r, f in points if f > 0]
    line = (fit.slope, fit.intercept) if fit is not None else None
    return PlotSeries("log(s/n)", "log(FDR)", pts, line, "FDR decay against sparsity ratio")
