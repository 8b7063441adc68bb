"""Minimal deterministic SVG line charts (no plotting dependency)."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 30, 50


class RenderError(ValueError):
    pass


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo, lo + 1.0]
    raw = (hi - lo) / (count - 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        if t >= lo - 1e-9 * step:
            ticks.append(round(t, 12))
        t += step
    if len(ticks) < 2:
        ticks = [lo, hi]
    return ticks


def _fmt(v):
    return f"{v:.6g}"


def render_svg_lines(series: Mapping[str, Sequence[Tuple[float, float]]],
                     xlabel: str = "x", ylabel: str = "y", title: str = "",
                     log_y: bool = False) -> str:
    if not series:
        raise RenderError("no series to render")
    prepared = {}
    for name, pts in series.items():
        pts = [(float(x), float(y)) for x, y in pts]
        if not pts:
            raise RenderError(f"series {name!r} is empty")
        for x, y in pts:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise RenderError(f"series {name!r} has a non-finite value ({x}, {y})")
            if log_y and y <= 0:
                raise RenderError(f"series {name!r} has non-positive y={y} on a log axis")
        if log_y:
            pts = [(x, math.log10(y)) for x, y in pts]
        prepared[name] = pts

    xs = [x for pts in prepared.values() for x, _ in pts]
    ys = [y for pts in prepared.values() for _, y in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    xt, yt = _ticks(xlo, xhi), _ticks(ylo, yhi)
    xlo, xhi = min(xlo, xt[0]), max(xhi, xt[-1])
    ylo, yhi = min(ylo, yt[0]), max(yhi, yt[-1])

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return MARGIN_T + (1.0 - (y - ylo) / (yhi - ylo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="18" text-anchor="middle" '
                   f'font-size="13">{_escape(title)}</text>')
    for t in xt:
        X = sx(t)
        out.append(f'<line class="xtick" x1="{X:.2f}" y1="{MARGIN_T + ph}" x2="{X:.2f}" '
                   f'y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN_T + ph + 18}" text-anchor="middle">'
                   f'{_fmt(t)}</text>')
    for t in yt:
        Y = sy(t)
        label = _fmt(t)
        out.append(f'<line class="ytick" x1="{MARGIN_L - 5}" y1="{Y:.2f}" x2="{MARGIN_L}" '
                   f'y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{Y + 4:.2f}" text-anchor="end">{label}</text>')
    ylab = f"log10 {ylabel}" if log_y else ylabel
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">'
               f'{_escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.2f})">{_escape(ylab)}</text>')

    for i, (name, pts) in enumerate(prepared.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        ly = MARGIN_T + 14 + 16 * i
        lx = MARGIN_L + pw + 10
        out.append(f'<line class="legend" x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 25}" y="{ly + 4}">{_escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s):
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def emit_svg_lines(series, path: Union[str, Path], xlabel="x", ylabel="y",
                   title: str = "", log_y: bool = False) -> Path:
    """Render ``series`` (name -> [(x, y), ...]) and write it to ``path``."""
    text = render_svg_lines(series, xlabel=xlabel, ylabel=ylabel, title=title, log_y=log_y)
    path = Path(path)
    path.write_text(text)
    return path
