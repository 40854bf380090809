"""Minimal self-contained SVG line plots (fixed 800x500 viewBox)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 500
_MARGIN = dict(left=80, right=30, top=50, bottom=60)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")
_DASHES = ("", "6,4", "2,3", "10,3,2,3", "")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _fmt(v):
    return f"{v:.2f}"


def line_plot(series, xlabel, ylabel, title="", y_range=None):
    """``series`` is a list of ``(label, xs, ys)``; returns the SVG document text."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x0, x1 = min(xs_all), max(xs_all)
    if y_range is None:
        y0, y1 = min(ys_all), max(ys_all)
        pad = 0.05 * (y1 - y0 or 1.0)
        y0, y1 = y0 - pad, y1 + pad
    else:
        y0, y1 = y_range
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    left, top = _MARGIN["left"], _MARGIN["top"]
    pw = WIDTH - left - _MARGIN["right"]
    ph = HEIGHT - top - _MARGIN["bottom"]

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1 - (y - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        x = px(t)
        parts.append(f'<line x1="{_fmt(x)}" y1="{top + ph}" x2="{_fmt(x)}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{top + ph + 20}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        parts.append(f'<line x1="{left - 5}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end">{t:g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="20" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {top + ph / 2})">{escape(ylabel)}</text>')
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-size="15">{escape(title)}</text>')
    parts.append(f'<clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        dash = _DASHES[i % len(_DASHES)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        style = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"'
                     f'{style} clip-path="url(#plot)"/>')
        ly = top + 18 + 18 * i
        parts.append(f'<line x1="{left + pw - 170}" y1="{ly}" x2="{left + pw - 140}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"{style}/>')
        parts.append(f'<text x="{left + pw - 132}" y="{ly + 4}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
