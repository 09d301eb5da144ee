"""Minimal inline-SVG chart rendering: line charts and horizontal bars.

Output is deterministic (fixed float formatting, no ids or timestamps) so
reports containing these charts are byte-stable.
"""

from __future__ import annotations

import numpy as np

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _esc(s: str) -> str:
    return (str(s).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _scale(vals: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float):
    if hi == lo:
        return np.full(len(vals), (out_lo + out_hi) / 2.0)
    return out_lo + (np.asarray(vals, dtype=float) - lo) / (hi - lo) * (out_hi - out_lo)


PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def line_chart(series, title: str = "", x_label: str = "", y_label: str = "",
               width: int = 420, height: int = 300, diagonal: bool = False) -> str:
    """series: list of (x array, y array, label)."""
    ml, mr, mt, mb = 52, 16, 28, 40
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValueError("line_chart requires finite coordinates")
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">']
    if title:
        parts.append(f'<text x="{width/2:.0f}" y="18" text-anchor="middle" '
                     f'{_FONT} font-size="13">{_esc(title)}</text>')
    x0, x1 = ml, width - mr
    y0, y1 = height - mb, mt
    parts.append(f'<rect x="{x0}" y="{y1}" width="{x1-x0}" height="{y0-y1}" '
                 'fill="none" stroke="#999" stroke-width="1"/>')
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        px = x0 + frac * (x1 - x0)
        py = y0 - frac * (y0 - y1)
        parts.append(f'<text x="{px:.1f}" y="{y0+16}" text-anchor="middle" '
                     f'{_FONT} font-size="10">{_fmt(xv)}</text>')
        parts.append(f'<text x="{x0-6}" y="{py+3:.1f}" text-anchor="end" '
                     f'{_FONT} font-size="10">{_fmt(yv)}</text>')
    if x_label:
        parts.append(f'<text x="{(x0+x1)/2:.0f}" y="{height-6}" text-anchor="middle" '
                     f'{_FONT} font-size="11">{_esc(x_label)}</text>')
    if y_label:
        parts.append(f'<text x="14" y="{(y0+y1)/2:.0f}" text-anchor="middle" '
                     f'transform="rotate(-90 14 {(y0+y1)/2:.0f})" {_FONT} '
                     f'font-size="11">{_esc(y_label)}</text>')
    if diagonal:
        parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" '
                     'stroke="#bbb" stroke-dasharray="4,3"/>')
    for k, (sx, sy, label) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        px = _scale(np.asarray(sx, dtype=float), x_lo, x_hi, x0, x1)
        py = _scale(np.asarray(sy, dtype=float), y_lo, y_hi, y0, y1)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.5"/>')
        if label:
            ly = mt + 14 * (k + 1)
            parts.append(f'<line x1="{x1-86}" y1="{ly-4}" x2="{x1-70}" y2="{ly-4}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{x1-66}" y="{ly}" {_FONT} '
                         f'font-size="10">{_esc(label)}</text>')
    parts.append("</svg>")
    return "".join(parts)


def bar_chart(labels, values, title: str = "", width: int = 480,
              bar_height: int = 18) -> str:
    """Horizontal bars, longest value scaled to full width."""
    values = [float(v) for v in values]
    if any(not np.isfinite(v) for v in values):
        raise ValueError("bar_chart requires finite values")
    n = len(values)
    ml, mr, mt = 150, 60, 28
    height = mt + n * (bar_height + 6) + 10
    vmax = max(values) if values and max(values) > 0 else 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">']
    if title:
        parts.append(f'<text x="{width/2:.0f}" y="18" text-anchor="middle" '
                     f'{_FONT} font-size="13">{_esc(title)}</text>')
    for i, (lab, v) in enumerate(zip(labels, values)):
        y = mt + i * (bar_height + 6)
        w = (width - ml - mr) * v / vmax
        parts.append(f'<text x="{ml-6}" y="{y+bar_height-5}" text-anchor="end" '
                     f'{_FONT} font-size="10">{_esc(lab)}</text>')
        parts.append(f'<rect x="{ml}" y="{y}" width="{_fmt(w)}" '
                     f'height="{bar_height}" fill="#1f77b4"/>')
        parts.append(f'<text x="{ml+4:.0f}" y="{y+bar_height-5}" {_FONT} '
                     f'font-size="10" fill="#fff">{v:.3f}</text>')
    parts.append("</svg>")
    return "".join(parts)
