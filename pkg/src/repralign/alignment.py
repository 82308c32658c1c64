"""Task alignment of a dendrogram: label-frequency scores, tie-grouped
average precision per level, and their mean over all levels (THAS)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .core import CurveSeries, EmbeddedDataset
from .errors import DegenerateLabels, EmptyRuns, MismatchedPartition, ShapeMismatch
from .hierclust import Dendrogram, PartitionView


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Per-point label scores: the label distribution of the point's cluster."""

    scores: np.ndarray

    def column(self, label: int) -> np.ndarray:
        return self.scores[:, label]


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    curve: CurveSeries
    thas: float
    label: int


@dataclass(frozen=True)
class ThasSummary:
    mean: float
    spread: float
    n_runs: int

    @property
    def spread_defined(self) -> bool:
        return self.n_runs > 1


def _check_partition(pv: PartitionView, ds: EmbeddedDataset) -> None:
    if pv.assignment.shape[0] != ds.n or pv.histograms.shape[1] != ds.n_labels:
        raise MismatchedPartition(
            f"partition covers {pv.assignment.shape[0]} points / {pv.histograms.shape[1]} labels, "
            f"dataset has {ds.n} / {ds.n_labels}"
        )


def label_scores(pv: PartitionView, ds: EmbeddedDataset) -> ScoreMatrix:
    _check_partition(pv, ds)
    freq = pv.histograms / pv.sizes[:, None]
    return ScoreMatrix(freq[pv.assignment])


def average_precision(scores, gold) -> float:
    """Tie-grouped average precision.

    Points are ranked by descending score and points sharing a score form one
    block; AP is the sum over blocks of the recall gained in the block times
    the precision at the end of the block.  A constant score therefore gives
    exactly the positive prevalence.
    """
    scores = np.asarray(scores, dtype=np.float64)
    gold = np.asarray(gold, dtype=bool)
    if scores.shape != gold.shape or scores.ndim != 1:
        raise ShapeMismatch("scores and gold must be 1-D and of equal length")
    total_pos = int(gold.sum())
    if total_pos == 0 or total_pos == gold.size:
        raise DegenerateLabels("average precision needs both positive and negative points")
    uniq, inv = np.unique(scores, return_inverse=True)
    tp = np.bincount(inv, weights=gold, minlength=len(uniq))[::-1]
    cnt = np.bincount(inv, minlength=len(uniq))[::-1].astype(np.float64)
    cum_tp = np.cumsum(tp)
    cum_cnt = np.cumsum(cnt)
    keep = tp > 0
    ap = 0.0
    for t, ct, cc in zip(tp[keep], cum_tp[keep], cum_cnt[keep]):
        ap += (t / total_pos) * (ct / cc)
    return float(ap)


def partition_alignment(pv: PartitionView, ds: EmbeddedDataset, label: int | None = None) -> float:
    label = ds.positive_class if label is None else label
    scores = label_scores(pv, ds).column(label)
    return average_precision(scores, ds.labels == label)


def thas(
    ds: EmbeddedDataset,
    dn: Dendrogram,
    label: int | None = None,
    backend: str | None = None,
) -> AlignmentResult:
    """Alignment curve over k = 1..n and its mean.

    ``label`` defaults to the positive class; any other class id scores that
    class against the rest.
    """
    dn.check_against(ds)
    label = ds.positive_class if label is None else int(label)
    gold = (ds.labels == label).astype(np.int64)
    if gold.sum() in (0, ds.n):
        raise DegenerateLabels(f"label {ds.label_vocab[label]!r} is absent or universal")
    kern = _backend.kernels(backend)
    values = kern.alignment_sweep(
        np.ascontiguousarray(dn.left, dtype=np.int64),
        np.ascontiguousarray(dn.right, dtype=np.int64),
        gold,
    )
    tau = float(np.mean(values))
    curve = CurveSeries(np.arange(1, ds.n + 1), values, tau)
    return AlignmentResult(curve, tau, label)


def thas_all_labels(ds: EmbeddedDataset, dn: Dendrogram, backend: str | None = None) -> tuple[dict[int, AlignmentResult], float]:
    """THAS for every class present in both roles, plus the mean over classes."""
    counts = ds.label_counts()
    results = {
        lab: thas(ds, dn, lab, backend)
        for lab in range(ds.n_labels)
        if 0 < counts[lab] < ds.n
    }
    return results, float(np.mean([r.thas for r in results.values()]))


def thas_averaged(runs: Sequence[AlignmentResult] | Sequence[float]) -> ThasSummary:
    """Mean and sample standard deviation of THAS across seeds (spread 0 for one run)."""
    if len(runs) == 0:
        raise EmptyRuns("no runs to average")
    taus = np.array([r.thas if isinstance(r, AlignmentResult) else float(r) for r in runs])
    spread = float(np.std(taus, ddof=1)) if len(taus) > 1 else 0.0
    return ThasSummary(float(np.mean(taus)), spread, len(taus))
