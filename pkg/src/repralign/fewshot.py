"""Few-shot learning curves with an L2-regularized logistic classifier.

The objective is mean log-loss plus ``lam / 2 * ||w||^2`` (bias not
penalized), minimized by deterministic full-batch L-BFGS with Armijo
backtracking.  Learning curves draw N training points per (seed, N),
choose ``lam`` by stratified k-fold CV, retrain on all N points and score
on a fixed test set; ALC is the mean test metric over the N grid.
"""

from __future__ import annotations

import logging
import warnings
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .core import CurveSeries, EmbeddedDataset
from .errors import DegenerateLabels, DimensionMismatch, FoldTooSmall, NonFinite, SingleClass
from .rng import Xoshiro256, derive_seed

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tuple(10.0**e for e in range(-4, 3))
DEFAULT_NS = tuple(range(100, 1001, 100))
METRICS = ("accuracy", "f1")


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    lam: float
    loss: float = float("nan")
    grad_norm: float = float("nan")
    n_iter: int = 0
    converged: bool = True


def objective(params: np.ndarray, X, y: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
    """Loss and gradient at ``params = [w..., b]`` for boolean labels ``y``."""
    w, b = params[:-1], params[-1]
    sign = np.where(y, 1.0, -1.0)
    margin = sign * (X @ w + b)
    m = margin.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, -margin))) + 0.5 * lam * float(w @ w)
    gz = -sign * expit(-margin) / m
    grad = np.empty_like(params)
    grad[:-1] = X.T @ gz + lam * w
    grad[-1] = gz.sum()
    return loss, grad


def _lbfgs(fun, x0: np.ndarray, tol: float, max_iter: int, memory: int = 10):
    x = x0.copy()
    f, g = fun(x)
    hist: deque = deque(maxlen=memory)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        q = g.copy()
        alphas = []
        for s, yv, rho in reversed(hist):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * yv
        if hist:
            s, yv, _ = hist[-1]
            q *= float(s @ yv) / float(yv @ yv)
        else:
            q /= max(1.0, float(np.linalg.norm(g)))
        for (s, yv, rho), a in zip(hist, reversed(alphas)):
            q += s * (a - rho * float(yv @ q))
        direction = -q
        slope = float(g @ direction)
        if slope >= 0.0:
            hist.clear()
            direction = -g
            slope = -float(g @ g)
        if slope == 0.0:
            converged = True
            break
        step = 1.0
        while True:
            xn = x + step * direction
            fn, gn = fun(xn)
            if fn <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-20:
                return x, f, g, it, True
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-12 * float(yv @ yv):
            hist.append((s, yv, 1.0 / sy))
        rel = (f - fn) / max(abs(f), 1e-300)
        x, f, g = xn, fn, gn
        if rel < tol:
            converged = True
            break
    return x, f, g, it, converged


def _check_training(X, y: np.ndarray) -> None:
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    npos = int(np.count_nonzero(y))
    if X.shape[0] < 2 or npos == 0 or npos == y.shape[0]:
        raise SingleClass("training data needs both classes")
    data = X.data if sp.issparse(X) else X
    if not np.all(np.isfinite(data)):
        raise NonFinite(-1, -1)


def train_logistic(X, y, lam: float, tol: float = 1e-9, max_iter: int = 500) -> LogisticModel:
    if lam <= 0:
        raise ValueError("lam must be positive")
    y = np.asarray(y, dtype=bool)
    _check_training(X, y)
    d = X.shape[1]
    params, loss, grad, n_iter, converged = _lbfgs(
        lambda p: objective(p, X, y, lam), np.zeros(d + 1), tol, max_iter
    )
    if not converged:
        log.warning("logistic training hit max_iter=%d (lam=%g)", max_iter, lam)
    return LogisticModel(
        params[:-1].copy(), float(params[-1]), lam, loss, float(np.linalg.norm(grad)), n_iter, converged
    )


def predict_scores(model: LogisticModel, X) -> np.ndarray:
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionMismatch(f"model expects {model.weights.shape[0]} features, got {X.shape[1]}")
    return expit(np.asarray(X @ model.weights).ravel() + model.bias)


def metric(pred_scores, gold, metric_kind: str) -> float:
    """Accuracy, or F1 of the positive class, with predictions ``score > 0.5``."""
    pred = np.asarray(pred_scores) > 0.5
    gold = np.asarray(gold, dtype=bool)
    if pred.shape != gold.shape or pred.size == 0:
        raise DimensionMismatch("predictions and gold must be non-empty and equal length")
    if metric_kind == "accuracy":
        return float(np.mean(pred == gold))
    if metric_kind == "f1":
        tp = int(np.count_nonzero(pred & gold))
        fp = int(np.count_nonzero(pred & ~gold))
        fn = int(np.count_nonzero(~pred & gold))
        if tp + fn == 0:
            raise DegenerateLabels("F1 undefined without gold positives")
        if tp == 0:
            return 0.0
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        return 2 * precision * recall / (precision + recall)
    raise ValueError(f"unknown metric {metric_kind!r}; expected one of {METRICS}")


def stratified_folds(y: np.ndarray, folds: int, rng: Xoshiro256) -> np.ndarray:
    """Fold id per point: each class is shuffled and dealt round-robin."""
    y = np.asarray(y, dtype=bool)
    out = np.empty(y.shape[0], dtype=np.int64)
    offset = 0
    for cls in (True, False):
        idx = [int(i) for i in np.flatnonzero(y == cls)]
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            out[i] = (offset + pos) % folds
        offset += len(idx)
    return out


def _folds_ok(y: np.ndarray, fold_of: np.ndarray, folds: int, metric_kind: str) -> bool:
    for f in range(folds):
        val = fold_of == f
        train = ~val
        if not val.any():
            return False
        ytr = y[train]
        if ytr.all() or not ytr.any():
            return False
        if metric_kind == "f1" and not y[val].any():
            return False
    return True


def cv_scores(X, y, grid: Sequence[float], folds: int, metric_kind: str, seed: int) -> dict[float, float]:
    """Mean validation metric per lambda over seeded stratified folds."""
    y = np.asarray(y, dtype=bool)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if y.shape[0] < folds:
        raise FoldTooSmall(f"{y.shape[0]} points cannot fill {folds} folds")
    rng = Xoshiro256(seed)
    fold_of = stratified_folds(y, folds, rng)
    if not _folds_ok(y, fold_of, folds, metric_kind):
        fold_of = stratified_folds(y, folds, rng)
        if not _folds_ok(y, fold_of, folds, metric_kind):
            raise FoldTooSmall(
                f"cannot form {folds} folds with both classes in training"
                + (" and a positive in every validation fold" if metric_kind == "f1" else "")
                + f" ({int(y.sum())} positives of {y.shape[0]})"
            )
    scores = {}
    for lam in sorted(set(float(g) for g in grid)):
        vals = []
        for f in range(folds):
            val = fold_of == f
            model = train_logistic(X[~val], y[~val], lam)
            vals.append(metric(predict_scores(model, X[val]), y[val], metric_kind))
        scores[lam] = float(np.mean(vals))
    return scores


def select_hyperparams(X, y, grid: Sequence[float], folds: int, metric_kind: str, seed: int) -> float:
    """Best lambda by CV; ties go to the smaller lambda."""
    scores = cv_scores(X, y, grid, folds, metric_kind, seed)
    best = max(scores.values())
    return min(lam for lam, s in scores.items() if s == best)


@dataclass(frozen=True, eq=False)
class LearningCurveResult:
    curve: CurveSeries
    per_seed: np.ndarray
    std: np.ndarray
    metric_kind: str
    alc: float
    seeds: tuple[int, ...]
    lambdas: np.ndarray
    flagged: list[tuple[int, int]] = field(default_factory=list)


_POOL: EmbeddedDataset | None = None
_TEST: EmbeddedDataset | None = None


def _init_worker(pool: EmbeddedDataset, test: EmbeddedDataset) -> None:
    global _POOL, _TEST
    _POOL, _TEST = pool, test


def _run_cell(args) -> tuple[float, float]:
    seed, n_train, metric_kind, grid, folds = args
    return _curve_cell(_POOL, _TEST, seed, n_train, metric_kind, grid, folds)


def _curve_cell(pool, test, seed, n_train, metric_kind, grid, folds) -> tuple[float, float]:
    rng = Xoshiro256(derive_seed(seed, n_train, 1))
    ypool = pool.positive_mask
    for attempt in range(2):
        rows = np.sort(np.asarray(rng.sample_indices(pool.n, n_train), dtype=np.int64))
        X = pool.vectors[rows]
        y = ypool[rows]
        if y.all() or not y.any():
            continue
        try:
            lam = select_hyperparams(X, y, grid, folds, metric_kind, derive_seed(seed, n_train, 2 + attempt))
        except FoldTooSmall:
            continue
        model = train_logistic(X, y, lam)
        return metric(predict_scores(model, test.vectors), test.positive_mask, metric_kind), lam
    return float("nan"), float("nan")


def learning_curve(
    pool: EmbeddedDataset,
    test: EmbeddedDataset,
    Ns: Sequence[int] = DEFAULT_NS,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    metric_kind: str = "accuracy",
    grid: Sequence[float] = DEFAULT_LAMBDAS,
    folds: int = 5,
    workers: int = 1,
) -> LearningCurveResult:
    """Mean test metric over seeds for each training size N, and its mean (ALC).

    A (seed, N) draw lacking one class, or too small to fold, is redrawn once
    and otherwise recorded in ``flagged`` and left out of that N's mean.
    """
    if metric_kind not in METRICS:
        raise ValueError(f"unknown metric {metric_kind!r}")
    Ns = sorted(int(n) for n in Ns)
    if not Ns or Ns[0] < folds:
        raise FoldTooSmall(f"training sizes must be >= folds ({folds})")
    if Ns[-1] > pool.n:
        raise ValueError(f"largest N={Ns[-1]} exceeds pool size {pool.n}")
    if pool.d != test.d:
        raise DimensionMismatch("pool and test have different dimensions")
    cells = [(int(s), n, metric_kind, tuple(grid), folds) for s in seeds for n in Ns]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(pool, test)) as ex:
            results = list(ex.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        results = [_curve_cell(pool, test, *c) for c in cells]
    vals = np.array([r[0] for r in results]).reshape(len(seeds), len(Ns))
    lams = np.array([r[1] for r in results]).reshape(len(seeds), len(Ns))
    flagged = [(int(seeds[i]), Ns[j]) for i, j in zip(*np.nonzero(np.isnan(vals)))]
    for cell in flagged:
        log.warning("degenerate draw at seed=%d N=%d excluded", *cell)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(vals, axis=0)
        std = np.nanstd(vals, axis=0, ddof=1) if len(seeds) > 1 else np.zeros(len(Ns))
    alc = float(np.mean(mean))
    curve = CurveSeries(np.asarray(Ns), mean, alc)
    return LearningCurveResult(curve, vals, std, metric_kind, alc, tuple(int(s) for s in seeds), lams, flagged)


def alc_of(values: Sequence[float]) -> float:
    """Area under a learning curve on a uniform N grid, normalized: the mean value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty curve")
    return float(values.mean())
