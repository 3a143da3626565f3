"""Minimal static SVG bar charts.

Geometry is computed with :class:`fractions.Fraction` and rendered with a
fixed number of decimals so the same data always yields the same bytes.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

WIDTH = 800
HEIGHT = 400
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 80
PLOT_W = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
PLOT_H = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

FILL = "#1e90ff"


def _n(x: Fraction | int | float) -> str:
    return f"{float(x):.2f}"


def nice_ceiling(value: Fraction | int) -> Fraction:
    """Smallest 1/2/5 x 10^k that is >= value (1 for non-positive input)."""
    value = Fraction(value)
    if value <= 0:
        return Fraction(1)
    scale = Fraction(1)
    while scale * 10 < value:
        scale *= 10
    while scale > value:
        scale /= 10
    for step in (1, 2, 5, 10):
        if step * scale >= value:
            return step * scale
    return 10 * scale


def bar_chart(
    title: str,
    labels: Sequence[str],
    values: Sequence[Fraction | int],
    *,
    y_max: Fraction | int | None = None,
    hlines: Sequence[int] = (),
    x_label: str = "",
    y_label: str = "",
    value_format=str,
) -> str:
    """Render one vertical bar per (label, value)."""
    vals = [Fraction(v) for v in values]
    top = Fraction(y_max) if y_max is not None else nice_ceiling(max(vals + [Fraction(h) for h in hlines], default=0))
    baseline = MARGIN_TOP + PLOT_H

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{escape(title)}</title>',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14" font-weight="bold">{escape(title)}</text>',
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{MARGIN_LEFT}" y1="{baseline}" x2="{MARGIN_LEFT + PLOT_W}" y2="{baseline}"/>'
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{baseline}"/></g>',
        f'<g class="y-ticks" font-family="sans-serif" font-size="10" text-anchor="end">'
        f'<text x="{MARGIN_LEFT - 4}" y="{baseline}">0</text>'
        f'<text x="{MARGIN_LEFT - 4}" y="{MARGIN_TOP + 4}" data-axis-max="{value_format(top)}">{escape(value_format(top))}</text></g>',
    ]

    n = len(vals)
    if n:
        slot = Fraction(PLOT_W, n)
        bar_w = slot * Fraction(4, 5)
        out.append(f'<g class="bars" fill="{FILL}" stroke="black" stroke-width="0.5">')
        for i, (label, v) in enumerate(zip(labels, vals)):
            h = v / top * PLOT_H if top else Fraction(0)
            x = MARGIN_LEFT + slot * i + (slot - bar_w) / 2
            out.append(
                f'<rect x="{_n(x)}" y="{_n(baseline - h)}" width="{_n(bar_w)}" height="{_n(h)}" '
                f'data-label={quoteattr(label)} data-value="{value_format(v)}" data-ratio="{float(v / top):.6f}"/>'
            )
        out.append("</g>")
        step = max(1, n // 20)
        out.append('<g class="x-labels" font-family="sans-serif" font-size="9" text-anchor="end">')
        for i in range(0, n, step):
            x = MARGIN_LEFT + slot * i + slot / 2
            out.append(
                f'<text x="{_n(x)}" y="{baseline + 12}" transform="rotate(-45 {_n(x)} {baseline + 12})">{escape(labels[i])}</text>'
            )
        out.append("</g>")

    for h in hlines:
        y = baseline - Fraction(h) / top * PLOT_H
        out.append(
            f'<line class="reference" data-value="{h}" x1="{MARGIN_LEFT}" y1="{_n(y)}" x2="{MARGIN_LEFT + PLOT_W}" y2="{_n(y)}" stroke="black" stroke-dasharray="4 2"/>'
        )

    if x_label:
        out.append(f'<text x="{MARGIN_LEFT + PLOT_W // 2}" y="{HEIGHT - 8}" text-anchor="middle" font-family="sans-serif" font-size="11">{escape(x_label)}</text>')
    if y_label:
        out.append(
            f'<text x="14" y="{MARGIN_TOP + PLOT_H // 2}" text-anchor="middle" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {MARGIN_TOP + PLOT_H // 2})">{escape(y_label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
