"""Minimal deterministic SVG line plots.

Output depends only on the input rows: no timestamps, ids or float
formatting that varies between runs.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=180, top=50, bottom=70)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf"]


def nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    """Round tick positions (1, 2 or 5 times a power of ten) covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("axis limits must be finite")
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(f * mag for f in (1, 2, 5, 10) if f * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 12))
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


def render_svg(series, title: str = "", xlabel: str = "", ylabel: str = "", dashed=()) -> str:
    """SVG text for `series`, a list of ``(label, xs, ys)`` drawn as polylines.

    Labels listed in `dashed` are drawn with a dashed stroke (model curves).
    """
    series = [(str(lbl), [float(x) for x in xs], [float(y) for y in ys]) for lbl, xs, ys in series]
    if not series or any(len(xs) == 0 or len(xs) != len(ys) for _, xs, ys in series):
        raise ValueError("every series needs the same nonzero number of x and y values")
    allx = [x for _, xs, _ in series for x in xs]
    ally = [y for _, _, ys in series for y in ys if math.isfinite(y)] or [0.0]
    xt = nice_ticks(min(allx), max(allx))
    yt = nice_ticks(min(ally), max(ally))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="28" text-anchor="middle" font-size="18">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in xt:
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" y2="{MARGIN["top"] + ph + 6}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 22}" text-anchor="middle" font-size="12">{_fmt(t)}</text>')
    for t in yt:
        Y = py(t)
        out.append(f'<line x1="{MARGIN["left"] - 6}" y1="{Y:.2f}" x2="{MARGIN["left"]}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 10}" y="{Y + 4:.2f}" text-anchor="end" font-size="12">{_fmt(t)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 20 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, (lbl, xs, ys) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        dash = ' stroke-dasharray="6,4"' if lbl in dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{pts}"/>')
        ly = MARGIN["top"] + 20 + 22 * k
        lx = WIDTH - MARGIN["right"] + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}" font-size="12">{escape(lbl)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series, path, title: str = "", xlabel: str = "", ylabel: str = "", dashed=()) -> None:
    """Write :func:`render_svg` output to `path`."""
    text = render_svg(series, title, xlabel, ylabel, dashed)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
