"""Davies-Bouldin index over dendrogram levels and its mean (ADBI).

Cluster spread is the mean Euclidean distance of members to the centroid;
separation is the Euclidean centroid distance.  A pair of distinct clusters
with coincident centroids and nonzero spread has an infinite ratio; such
levels are reported as +inf and left out of the ADBI mean.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import CurveSeries, EmbeddedDataset
from .errors import KTooSmall
from .hierclust import Dendrogram, PartitionView

log = logging.getLogger(__name__)

DENSIFY_LIMIT_BYTES = 2 << 30


@dataclass(frozen=True, eq=False)
class QualityResult:
    curve: CurveSeries
    adbi: float
    n_infinite: int
    stride: int


def _pair_ratio(spread: np.ndarray, dist: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = spread / dist
    zero = dist == 0.0
    r[zero] = np.where(spread[zero] > 0.0, np.inf, 0.0)
    return r


def dbi(pv: PartitionView, ds: EmbeddedDataset) -> float:
    """Davies-Bouldin index of one partition (lower is better)."""
    if pv.k < 2:
        raise KTooSmall("DBI needs at least two clusters")
    X = _dense(ds)
    cents = pv.centroids.toarray() if hasattr(pv.centroids, "toarray") else np.asarray(pv.centroids)
    dev = np.linalg.norm(X - cents[pv.assignment], axis=1)
    sigma = np.bincount(pv.assignment, weights=dev, minlength=pv.k) / pv.sizes
    diff = cents[:, None, :] - cents[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    ratio = _pair_ratio(sigma[:, None] + sigma[None, :], dist)
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean())


def _dense(ds: EmbeddedDataset) -> np.ndarray:
    if ds.is_sparse and ds.n * ds.d * 8 > DENSIFY_LIMIT_BYTES:
        raise MemoryError(
            f"DBI needs dense vectors; {ds.n}x{ds.d} would exceed {DENSIFY_LIMIT_BYTES >> 30} GiB. "
            "Reduce the vocabulary (raise min_count) or subsample."
        )
    return np.ascontiguousarray(ds.dense_vectors(), dtype=np.float64)


def dbi_curve(
    ds: EmbeddedDataset,
    dn: Dendrogram,
    k_stride: int = 1,
    backend: str | None = None,
) -> QualityResult:
    """DBI at k = 2, 2 + stride, ... <= n; ADBI is the mean of the finite values."""
    if k_stride < 1:
        raise ValueError("k_stride must be >= 1")
    dn.check_against(ds)
    n = ds.n
    ks = np.arange(2, n + 1, k_stride)
    evaluate = np.zeros(n + 1, dtype=np.uint8)
    evaluate[ks] = 1
    kern = _backend.kernels(backend)
    out = kern.dbi_sweep(
        _dense(ds),
        np.ascontiguousarray(dn.left, dtype=np.int64),
        np.ascontiguousarray(dn.right, dtype=np.int64),
        evaluate,
    )
    values = out[ks]
    finite = np.isfinite(values)
    n_inf = int((~finite).sum())
    if n_inf:
        log.warning("%d of %d DBI levels have coincident centroids and were excluded", n_inf, len(ks))
    adbi = float(values[finite].mean()) if finite.any() else float("nan")
    curve = CurveSeries(ks, values, adbi, {"stride": k_stride, "excluded_levels": n_inf})
    return QualityResult(curve, adbi, n_inf, k_stride)
