"""Small self-contained SVG line charts and scatter plots.

Figures are for viewing only; the CSV artifacts hold the data.
"""

from __future__ import annotations

import math
from html import escape
from pathlib import Path
from typing import Sequence

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 55
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


class _Axes:
    def __init__(self, xs: Sequence[float], ys: Sequence[float], logx: bool = False):
        self.logx = logx
        fx = [self._tx(x) for x in xs]
        self.x0, self.x1 = min(fx), max(fx)
        self.y0, self.y1 = min(ys), max(ys)
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        pad = 0.04 * (self.y1 - self.y0)
        self.y0 -= pad
        self.y1 += pad

    def _tx(self, x: float) -> float:
        return math.log10(x) if self.logx else x

    def px(self, x: float) -> float:
        w = WIDTH - MARGIN_L - MARGIN_R
        return MARGIN_L + (self._tx(x) - self.x0) / (self.x1 - self.x0) * w

    def py(self, y: float) -> float:
        h = HEIGHT - MARGIN_T - MARGIN_B
        return HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * h

    def frame(self, title: str, xlabel: str, ylabel: str) -> list[str]:
        out = [
            f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
            f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="#333"/>',
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
            f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
            f'<text x="16" y="{(MARGIN_T + HEIGHT - MARGIN_B) / 2:.1f}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 16 {(MARGIN_T + HEIGHT - MARGIN_B) / 2:.1f})">{escape(ylabel)}</text>',
        ]
        for t in _ticks(self.y0, self.y1):
            y = self.py(t)
            out.append(f'<line x1="{MARGIN_L - 4}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}" stroke="#333"/>')
            out.append(f'<text x="{MARGIN_L - 7}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{t:g}</text>')
        for t in _ticks(self.x0, self.x1):
            x = MARGIN_L + (t - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
            label = f"{10 ** t:g}" if self.logx else f"{t:g}"
            out.append(f'<line x1="{x:.2f}" y1="{HEIGHT - MARGIN_B}" x2="{x:.2f}" y2="{HEIGHT - MARGIN_B + 4}" stroke="#333"/>')
            out.append(f'<text x="{x:.2f}" y="{HEIGHT - MARGIN_B + 17}" text-anchor="middle" font-size="11">{label}</text>')
        return out


def _document(body: list[str]) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def _legend(names: Sequence[str], marker: str = "line") -> list[str]:
    out = []
    for i, name in enumerate(names):
        y = MARGIN_T + 12 + 18 * i
        x = WIDTH - MARGIN_R + 12
        color = PALETTE[i % len(PALETTE)]
        if marker == "line":
            out.append(f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        else:
            out.append(f'<circle cx="{x + 9}" cy="{y}" r="4" fill="{color}"/>')
        out.append(f'<text x="{x + 24}" y="{y + 4}" font-size="11">{escape(name)}</text>')
    return out


def line_chart(
    path,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    max_points: int = 2000,
) -> None:
    """Write one polyline per ``(name, xs, ys)`` series (long series are thinned)."""
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys if math.isfinite(y)]
    ax = _Axes(all_x, all_y or [0.0, 1.0], logx)
    body = ax.frame(title, xlabel, ylabel)
    for i, (_, xs, ys) in enumerate(series):
        step = max(1, len(xs) // max_points)
        pts = [
            f"{ax.px(x):.2f},{ax.py(y):.2f}"
            for j, (x, y) in enumerate(zip(xs, ys))
            if (j % step == 0 or j == len(xs) - 1) and math.isfinite(y)
        ]
        body.append(
            f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1.6" points="{" ".join(pts)}"/>'
        )
    if len(series) > 1 or series[0][0]:
        body.extend(_legend([name for name, _, _ in series]))
    Path(path).write_text(_document(body), encoding="utf8")


def scatter(
    path,
    groups: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> None:
    all_x = [x for _, xs, _ in groups for x in xs]
    all_y = [y for _, _, ys in groups for y in ys]
    ax = _Axes(all_x, all_y)
    body = ax.frame(title, xlabel, ylabel)
    for i, (_, xs, ys) in enumerate(groups):
        color = PALETTE[i % len(PALETTE)]
        body.extend(f'<circle cx="{ax.px(x):.2f}" cy="{ax.py(y):.2f}" r="4" fill="{color}"/>' for x, y in zip(xs, ys))
    body.extend(_legend([name for name, _, _ in groups], marker="dot"))
    Path(path).write_text(_document(body), encoding="utf8")
