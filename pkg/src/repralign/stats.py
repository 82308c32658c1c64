"""Correlation tests and Table-style report matrices.

p-values are two-sided.  Pearson uses the t transform of r against a
Student t with n - 2 degrees of freedom.  Spearman is Pearson on mid-ranks;
for n <= 9 its p-value is the exact permutation probability, above that the
same t approximation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateCell, ShapeMismatch, TooFewPairs, ZeroVariance

EXACT_SPEARMAN_MAX_N = 9


def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - tail if t > 0 else tail


def _as_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ShapeMismatch("x and y must be 1-D sequences of equal length")
    if x.size < 3:
        raise TooFewPairs(f"need at least 3 pairs, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("correlation inputs must be finite")
    return x, y


def _r_to_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    t = r * math.sqrt(df / ((1.0 - r) * (1.0 + r)))
    return t_two_sided_p(t, df)


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson(x, y) -> tuple[float, float]:
    x, y = _as_pairs(x, y)
    r = _pearson_r(x, y)
    return r, _r_to_p(r, x.size)


def midranks(values) -> np.ndarray:
    """1-based ranks with tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    ranks = np.empty(values.size)
    start = 0
    for end in range(1, values.size + 1):
        if end == values.size or sorted_vals[end] != sorted_vals[start]:
            ranks[order[start:end]] = (start + end + 1) / 2.0
            start = end
    return ranks


def _exact_spearman_p(rx: np.ndarray, ry: np.ndarray) -> float:
    # doubled mid-ranks are integers, so the permutation statistic is exact
    n = rx.size
    ax = np.rint(2 * rx).astype(np.int64) - (n + 1)
    ay = np.rint(2 * ry).astype(np.int64) - (n + 1)
    observed = abs(int(ax @ ay))
    perms = np.array(list(itertools.permutations(ay)), dtype=np.int64)
    stats = np.abs(perms @ ax)
    return float(np.count_nonzero(stats >= observed)) / perms.shape[0]


def spearman(x, y) -> tuple[float, float]:
    x, y = _as_pairs(x, y)
    rx, ry = midranks(x), midranks(y)
    r = _pearson_r(rx, ry)
    if x.size <= EXACT_SPEARMAN_MAX_N:
        return r, _exact_spearman_p(rx, ry)
    return r, _r_to_p(r, x.size)


@dataclass(frozen=True)
class CorrelationReport:
    pairs: list[tuple[float, float, str]]
    pearson_r: float
    pearson_p: float
    spearman_r: float
    spearman_p: float


def correlate(x: Sequence[float], y: Sequence[float], tags: Sequence[str] | None = None) -> CorrelationReport:
    tags = list(tags) if tags is not None else [str(i) for i in range(len(x))]
    rp, pp = pearson(x, y)
    rs, ps = spearman(x, y)
    pairs = [(float(a), float(b), t) for a, b, t in zip(x, y, tags)]
    return CorrelationReport(pairs, rp, pp, rs, ps)


@dataclass(frozen=True)
class Cell:
    representation: str
    dataset: str
    metric: str
    value: float


def _as_cells(cells: Iterable) -> list[Cell]:
    out = []
    for c in cells:
        if isinstance(c, Cell):
            out.append(c)
        else:
            rep, dataset, metric, value = c
            value = float("nan") if value is None or value == "" else float(value)
            out.append(Cell(str(rep), str(dataset), str(metric), value))
    return out


@dataclass(frozen=True, eq=False)
class ReportMatrix:
    metric: str
    rows: list[str]
    cols: list[str]
    cells: np.ndarray
    row_means: np.ndarray
    meta: dict = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReportMatrix):
            return NotImplemented
        return (
            self.metric == other.metric
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.cells, other.cells, equal_nan=True)
            and np.array_equal(self.row_means, other.row_means, equal_nan=True)
        )

    def to_text(self, digits: int = 2) -> str:
        header = ["repr", *self.cols, "mean"]
        body = [
            [r, *(_fmt(v, digits) for v in row), _fmt(m, digits)]
            for r, row, m in zip(self.rows, self.cells, self.row_means)
        ]
        widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
        lines = [f"{self.metric}"]
        for line in [header, *body]:
            lines.append("  ".join(s.ljust(w) if i == 0 else s.rjust(w) for i, (s, w) in enumerate(zip(line, widths))))
        return "\n".join(lines) + "\n"


def _fmt(v: float, digits: int) -> str:
    return "-" if not np.isfinite(v) else f"{v:.{digits}f}"


def build_report(
    cells: Iterable,
    metric: str | None = None,
    columns: Sequence[str] | None = None,
    descending: bool = True,
) -> ReportMatrix:
    """Arrange ``(representation, dataset, metric, value)`` cells as a matrix.

    Rows are sorted by their mean (highest first unless ``descending`` is
    False), ties by name.  Columns follow ``columns`` or sort by name.  A
    value of None/NaN marks a missing cell; absent cells are an error.
    """
    cells = _as_cells(cells)
    if metric is not None:
        cells = [c for c in cells if c.metric == metric]
    metrics = {c.metric for c in cells}
    if not cells:
        raise ShapeMismatch("no cells for the requested metric")
    if len(metrics) > 1:
        raise ShapeMismatch(f"cells mix several metrics: {sorted(metrics)}")
    metric = metrics.pop()
    grid: dict[tuple[str, str], float] = {}
    for c in cells:
        key = (c.representation, c.dataset)
        if key in grid:
            raise DuplicateCell(f"duplicate cell {key} for metric {metric}")
        grid[key] = c.value
    reps = sorted({r for r, _ in grid})
    cols = list(columns) if columns is not None else sorted({d for _, d in grid})
    mat = np.full((len(reps), len(cols)), np.nan)
    for i, r in enumerate(reps):
        for j, d in enumerate(cols):
            if (r, d) not in grid:
                raise ShapeMismatch(f"missing cell ({r}, {d}) for metric {metric}; mark it explicitly")
            mat[i, j] = grid[(r, d)]
    with np.errstate(invalid="ignore"):
        means = np.array([np.nanmean(row) if np.isfinite(row).any() else np.nan for row in mat])
    sign = -1.0 if descending else 1.0
    order = sorted(range(len(reps)), key=lambda i: (np.isnan(means[i]), sign * np.nan_to_num(means[i]), reps[i]))
    return ReportMatrix(metric, [reps[i] for i in order], cols, mat[order], means[order])


def pairs_from_cells(
    cells: Iterable, x_metric: str, y_metric: str, granularity: str = "cells"
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Pair two metrics per (representation, dataset), or per representation mean."""
    cells = _as_cells(cells)
    by_key: dict[str, dict[tuple[str, str], float]] = {x_metric: {}, y_metric: {}}
    for c in cells:
        if c.metric in by_key:
            key = (c.representation, c.dataset)
            if key in by_key[c.metric]:
                raise DuplicateCell(f"duplicate cell {key} for metric {c.metric}")
            by_key[c.metric][key] = c.value
    keys = sorted(set(by_key[x_metric]) & set(by_key[y_metric]))
    keys = [k for k in keys if np.isfinite(by_key[x_metric][k]) and np.isfinite(by_key[y_metric][k])]
    if granularity == "cells":
        xs = np.array([by_key[x_metric][k] for k in keys])
        ys = np.array([by_key[y_metric][k] for k in keys])
        return xs, ys, [f"{r}:{d}" for r, d in keys]
    if granularity == "means":
        reps = sorted({r for r, _ in keys})
        xs = np.array([np.mean([by_key[x_metric][k] for k in keys if k[0] == r]) for r in reps])
        ys = np.array([np.mean([by_key[y_metric][k] for k in keys if k[0] == r]) for r in reps])
        return xs, ys, reps
    raise ValueError(f"unknown granularity {granularity!r}")
