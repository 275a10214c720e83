"""Minimal standalone SVG emitters for the diagnostic plots.

Plain text output with fixed-precision coordinates keeps the files
deterministic and diff-friendly; there is no plotting-stack dependency.
"""

from __future__ import annotations

import numpy as np

__all__ = ["qq_plot_svg", "influence_bar_svg"]

_W = 560
_H = 560
_MARGIN = 60


def _fx(v, lo, hi, span):
    return _MARGIN + (v - lo) / (hi - lo) * span


def _header(title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{title}</text>',
    ]


def qq_plot_svg(theoretical, empirical, title="Uniform QQ plot of PIT residuals") -> str:
    """Scatter of empirical residual quantiles against uniform quantiles,
    with the 1:1 diagonal that a well-specified model should follow."""
    theoretical = np.asarray(theoretical, dtype=float)
    empirical = np.asarray(empirical, dtype=float)
    span = _W - 2 * _MARGIN
    parts = _header(title)
    x0, y0 = _MARGIN, _H - _MARGIN
    x1, y1 = _W - _MARGIN, _MARGIN
    parts.append(
        f'<rect x="{x0}" y="{y1}" width="{span}" height="{span}" fill="none" '
        f'stroke="black" stroke-width="1"/>'
    )
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        px = _fx(t, 0.0, 1.0, span)
        py = _H - _fx(t, 0.0, 1.0, span)
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#d62728" stroke-width="1.5"/>'
    )
    for t, e in zip(theoretical, empirical):
        px = _fx(t, 0.0, 1.0, span)
        py = _H - _fx(e, 0.0, 1.0, span)
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2" fill="#1f77b4" fill-opacity="0.6"/>')
    parts.append(
        f'<text x="{_W/2:.1f}" y="{_H - 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">theoretical uniform quantile</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def influence_bar_svg(values, flags, threshold, title="Case-deletion influence") -> str:
    """One vertical bar per observation (red when flagged) with the flag
    threshold drawn as a dashed line."""
    values = np.nan_to_num(np.asarray(values, dtype=float), nan=0.0)
    flags = np.asarray(flags, dtype=bool)
    n = values.shape[0]
    span_x = _W - 2 * _MARGIN
    span_y = _H - 2 * _MARGIN
    top = max(float(values.max(initial=0.0)), threshold * 1.25, 1e-9)
    parts = _header(title)
    x0, y0 = _MARGIN, _H - _MARGIN
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{_W - _MARGIN}" y2="{y0}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{_MARGIN}" stroke="black" stroke-width="1"/>'
    )
    bw = span_x / max(n, 1)
    for i, (v, f) in enumerate(zip(values, flags)):
        h = max(v, 0.0) / top * span_y
        color = "#d62728" if f else "#1f77b4"
        parts.append(
            f'<rect x="{x0 + i * bw:.2f}" y="{y0 - h:.2f}" width="{max(bw * 0.9, 0.5):.2f}" '
            f'height="{h:.2f}" fill="{color}"/>'
        )
    ty = y0 - threshold / top * span_y
    parts.append(
        f'<line x1="{x0}" y1="{ty:.2f}" x2="{_W - _MARGIN}" y2="{ty:.2f}" '
        f'stroke="#555555" stroke-width="1" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{_W - _MARGIN}" y="{ty - 6:.2f}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">flag threshold {threshold:.4f}</text>'
    )
    parts.append(
        f'<text x="{_W/2:.1f}" y="{_H - 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">observation index</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
