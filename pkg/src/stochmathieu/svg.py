"""Minimal deterministic SVG line/step/polygon plots.

Output depends only on the inputs: coordinates are printed with a fixed
number of decimals and no timestamps or ids are embedded, so identical
data gives byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import EmptyInput

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
KINDS = ("line", "step", "points", "polygon")


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    kind: str = "line"
    color: str | None = None
    dashed: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind != "step" and np.shape(self.x) != np.shape(self.y):
            raise ValueError(f"series {self.label!r}: x and y differ in length")


@dataclass(frozen=True)
class PlotStyle:
    title: str = ""
    xlabel: str = "x"
    ylabel: str = "y"
    logy: bool = False
    width: int = 640
    height: int = 440
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    # on log axes, values below max * floor are clipped
    log_floor: float = 1e-10
    margins: tuple[int, int, int, int] = field(default=(50, 30, 60, 80))  # top, right, bottom, left


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while start + k * step <= hi + 1e-9 * step:
        ticks.append(start + k * step)
        k += 1
    return ticks


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


def emit_svg(series: Sequence[Series], style: PlotStyle = PlotStyle()) -> str:
    """Render ``series`` into a standalone SVG document."""
    series = [s for s in series if np.size(s.x) > 0]
    if not series:
        raise EmptyInput("nothing to plot")
    xs = np.concatenate([np.asarray(s.x, dtype=float).ravel() for s in series])
    ys = np.concatenate([np.asarray(s.y, dtype=float).ravel() for s in series])
    if style.logy:
        pos = ys[ys > 0]
        if pos.size == 0:
            raise EmptyInput("no positive values for a log axis")
        ymax = float(pos.max())
        ylim = style.ylim or (max(float(pos.min()), ymax * style.log_floor), ymax)
        ylo, yhi = math.log10(ylim[0]), math.log10(ylim[1])
    else:
        ylim = style.ylim or (float(np.nanmin(ys)), float(np.nanmax(ys)))
        ylo, yhi = ylim
    xlo, xhi = style.xlim or (float(np.nanmin(xs)), float(np.nanmax(xs)))
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5

    top, right, bottom, left = style.margins
    pw = style.width - left - right
    ph = style.height - top - bottom

    def px(x):
        return left + (np.asarray(x, dtype=float) - xlo) / (xhi - xlo) * pw

    def py(y):
        y = np.asarray(y, dtype=float)
        if style.logy:
            y = np.log10(np.clip(y, 10**ylo, None))
        return top + (1.0 - (y - ylo) / (yhi - ylo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>',
        '<defs><clipPath id="plot">'
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath></defs>',
    ]

    # axes and ticks
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _nice_ticks(xlo, xhi):
        X = _f(float(px(t)))
        out.append(f'<line x1="{X}" y1="{top + ph}" x2="{X}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{top + ph + 18}" text-anchor="middle">{_fmt_tick(t)}</text>')
    if style.logy:
        yticks = [10.0**k for k in range(math.ceil(ylo - 1e-9), math.floor(yhi + 1e-9) + 1)]
        step = max(1, math.ceil(len(yticks) / 8))
        yticks = yticks[::step]
    else:
        yticks = _nice_ticks(ylo, yhi)
    for t in yticks:
        Y = _f(float(py(t)))
        label = f"1e{round(math.log10(t))}" if style.logy else _fmt_tick(t)
        out.append(f'<line x1="{left - 5}" y1="{Y}" x2="{left}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle">{label}</text>')
    out.append(
        f'<text x="{_f(left + pw / 2)}" y="{style.height - 15}" text-anchor="middle">{escape(style.xlabel)}</text>'
    )
    out.append(
        f'<text x="18" y="{_f(top + ph / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_f(top + ph / 2)})">{escape(style.ylabel)}</text>'
    )
    if style.title:
        out.append(f'<text x="{_f(left + pw / 2)}" y="{top - 18}" text-anchor="middle" font-size="14">{escape(style.title)}</text>')

    # data
    out.append('<g clip-path="url(#plot)">')
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        x = np.asarray(s.x, dtype=float).ravel()
        y = np.asarray(s.y, dtype=float).ravel()
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        if s.kind == "polygon":
            pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px(x), py(y)))
            out.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
            continue
        if s.kind == "points":
            ok = np.isfinite(y) & ((y > 0) if style.logy else True)
            for a, b in zip(px(x[ok]), py(y[ok])):
                out.append(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="2" fill="{color}"/>')
            continue
        if s.kind == "step":
            # x holds edges, y one value per bin
            if x.size != y.size + 1:
                raise ValueError(f"step series {s.label!r} needs len(x) == len(y) + 1")
            x = np.repeat(x, 2)[1:-1]
            y = np.repeat(y, 2)
        ok = np.isfinite(y) & ((y > 0) if style.logy else True)
        # split at gaps so missing values are not bridged
        runs = np.split(np.arange(x.size), np.flatnonzero(np.diff(ok.astype(int)) != 0) + 1)
        for r in runs:
            if r.size < 2 or not ok[r[0]]:
                continue
            pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px(x[r]), py(y[r])))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
    out.append("</g>")

    # legend
    lx, ly = left + pw - 190, top + 12
    row = 0
    for i, s in enumerate(series):
        if not s.label:
            continue
        color = s.color or PALETTE[i % len(PALETTE)]
        y0 = ly + 16 * row
        row += 1
        if s.kind == "polygon":
            out.append(f'<rect x="{lx}" y="{y0 - 5}" width="20" height="10" fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
        else:
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            out.append(f'<line x1="{lx}" y1="{y0}" x2="{lx + 20}" y2="{y0}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 26}" y="{y0}" dominant-baseline="middle">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
