"""Minimal deterministic SVG scan plots (no fonts embedded, fixed canvas)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH = 800
HEIGHT = 500
MARGIN = {"left": 80, "right": 20, "top": 40, "bottom": 60}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list:
    span = hi - lo
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    first = np.ceil(lo / step) * step
    return [float(t) for t in np.arange(first, hi + 0.5 * step, step) if t <= hi + 1e-12 * span]


def scan_panel(title: str, x_mm, f, f_err, model_x_mm, model_f,
               x_label: str = "wire position (mm)", y_label: str = "fractional count f",
               y_range=None) -> str:
    """One panel: data points with error bars and a single model polyline.

    With ``y_range`` the axes depend only on the model grid, so the model
    polyline is independent of the data.
    """
    x = np.asarray(x_mm, float)
    y = np.asarray(f, float)
    e = np.asarray(f_err, float)
    mx = np.asarray(model_x_mm, float)
    my = np.asarray(model_f, float)

    if y_range is None:
        x_lo, x_hi = min(x.min(), mx.min()), max(x.max(), mx.max())
        y_lo = min((y - e).min(), my.min())
        y_hi = max((y + e).max(), my.max())
        pad = 0.05 * (y_hi - y_lo or 1.0)
        y_lo, y_hi = y_lo - pad, y_hi + pad
    else:
        x_lo, x_hi = mx.min(), mx.max()
        y_lo, y_hi = map(float, y_range)

    left, right = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return left + (v - x_lo) / (x_hi - x_lo) * (right - left)

    def py(v):
        return bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{WIDTH / 2:.0f}" y="{top - 15}" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="20" y="{HEIGHT / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {HEIGHT / 2:.0f})">{escape(y_label)}</text>',
    ]
    for t in _nice_ticks(x_lo, x_hi):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{bottom}" x2="{_fmt(px(t))}" y2="{bottom + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{bottom + 20}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        out.append(f'<line x1="{left - 5}" y1="{_fmt(py(t))}" x2="{left}" y2="{_fmt(py(t))}" '
                   'stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end">{t:.4g}</text>')

    out.append('<g class="data" fill="black" stroke="black" stroke-width="1">')
    for xi, yi, ei in zip(x, y, e):
        if ei > 0:
            out.append(f'<line x1="{_fmt(px(xi))}" y1="{_fmt(py(yi - ei))}" '
                       f'x2="{_fmt(px(xi))}" y2="{_fmt(py(yi + ei))}"/>')
        out.append(f'<circle cx="{_fmt(px(xi))}" cy="{_fmt(py(yi))}" r="2"/>')
    out.append("</g>")
    points = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(mx, my))
    out.append(f'<polyline class="model" fill="none" stroke="red" stroke-width="1.5" '
               f'points="{points}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
