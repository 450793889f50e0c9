"""Minimal SVG line plots emitted as direct markup (no plotting framework).

Output is deterministic for identical inputs: no timestamps, fixed float
formatting, series drawn in the order given.
"""

from __future__ import annotations

import math
import os

_PALETTE = (
    "#1b6ca8", "#d1495b", "#2e933c", "#8f2d56", "#e08d18",
    "#3b3b98", "#0f8b8d", "#77625c", "#593f62", "#202020",
    "#74b3ce", "#f4a259", "#6a994e", "#b23a48", "#5f0f40",
    "#118ab2", "#9a8c98",
)

_WIDTH, _HEIGHT = 720, 480
_ML, _MR, _MT, _MB = 72, 160, 40, 56  # margins; right one holds the legend


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0**e for e in range(lo_e, hi_e + 1)]
    if hi == lo:
        return [lo]
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append(v)
        v += step
    return out


def _tick_label(v: float, log: bool) -> str:
    if log:
        e = round(math.log10(v))
        return f"1e{e}" if abs(e) > 3 else f"{v:g}"
    return f"{v:g}"


def line_plot(
    path: str | os.PathLike,
    series: dict[str, tuple[list[float], list[float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    logx: bool = False,
    logy: bool = False,
) -> None:
    """Write a multi-series line plot.

    ``series`` maps a legend label to (xs, ys). On log axes, nonpositive
    values are dropped from that series.
    """
    cleaned: dict[str, tuple[list[float], list[float]]] = {}
    for name, (xs, ys) in series.items():
        pts = [
            (x, y)
            for x, y in zip(xs, ys)
            if (not logx or x > 0) and (not logy or y > 0)
        ]
        if pts:
            cleaned[name] = ([p[0] for p in pts], [p[1] for p in pts])
    if not cleaned:
        raise ValueError("nothing to plot after filtering nonpositive values")

    all_x = [x for xs, _ in cleaned.values() for x in xs]
    all_y = [y for _, ys in cleaned.values() for y in ys]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = (y_lo * 0.5, y_hi * 2.0) if logy else (y_lo - 0.5, y_hi + 0.5)

    def tx(v: float) -> float:
        a, b = (math.log10(x_lo), math.log10(x_hi)) if logx else (x_lo, x_hi)
        u = (math.log10(v) if logx else v)
        return _ML + (u - a) / (b - a) * (_WIDTH - _ML - _MR)

    def ty(v: float) -> float:
        a, b = (math.log10(y_lo), math.log10(y_hi)) if logy else (y_lo, y_hi)
        u = (math.log10(v) if logy else v)
        return _HEIGHT - _MB - (u - a) / (b - a) * (_HEIGHT - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="monospace" font-size="12">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH // 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
    ]
    axis = f'stroke="#404040" stroke-width="1"'
    x0, y0 = _ML, _HEIGHT - _MB
    x1, y1 = _WIDTH - _MR, _MT
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" {axis}/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" {axis}/>')

    for v in _ticks(x_lo, x_hi, logx):
        if v < x_lo * (0.999 if logx else 1) or v > x_hi * (1.001 if logx else 1):
            if not (x_lo <= v <= x_hi):
                continue
        px = tx(min(max(v, x_lo), x_hi))
        parts.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 5}" {axis}/>')
        parts.append(
            f'<text x="{_fmt(px)}" y="{y0 + 18}" text-anchor="middle">{_tick_label(v, logx)}</text>'
        )
    for v in _ticks(y_lo, y_hi, logy):
        if not (y_lo <= v <= y_hi):
            continue
        py = ty(v)
        parts.append(f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" {axis}/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end">{_tick_label(v, logy)}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) // 2}" y="{_HEIGHT - 14}" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{(y0 + y1) // 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(y0 + y1) // 2})">{ylabel}</text>'
    )

    for i, (name, (xs, ys)) in enumerate(cleaned.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{_fmt(tx(x))}" cy="{_fmt(ty(y))}" r="2.5" fill="{color}"/>')
        ly = _MT + 16 * i
        lx = _WIDTH - _MR + 12
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 24}" y="{ly + 4}">{name}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
