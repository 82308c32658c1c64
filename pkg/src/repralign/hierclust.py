"""Ward agglomerative clustering and per-level partition views.

Merge heights are Ward variance increases

    cost(A, B) = |A||B| / (|A| + |B|) * ||mean(A) - mean(B)||^2

so the costs of a full dendrogram add up to the total sum of squared
deviations about the global centroid.  Leaves have ids ``0..n-1`` and the
``m``-th merge creates node ``n + m``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from . import _backend
from .core import EmbeddedDataset
from .errors import KOutOfRange, MismatchedDendrogram, TooLargeForOracle

ORACLE_MAX_N = 512
SPARSE_DENSE_THRESHOLD = 0.25


@dataclass(frozen=True, eq=False)
class Dendrogram:
    n: int
    left: np.ndarray
    right: np.ndarray
    cost: np.ndarray
    size: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cost)

    def merges(self) -> list[tuple[int, int, float, int]]:
        return [
            (int(l), int(r), float(c), int(s))
            for l, r, c, s in zip(self.left, self.right, self.cost, self.size)
        ]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dendrogram):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.right, other.right)
            and np.array_equal(self.cost, other.cost)
            and np.array_equal(self.size, other.size)
        )

    def check_against(self, ds: EmbeddedDataset) -> None:
        if self.n != ds.n:
            raise MismatchedDendrogram(f"dendrogram has {self.n} leaves, dataset has {ds.n} points")
        fp = self.meta.get("fingerprint")
        if fp is not None and fp != ds.fingerprint():
            raise MismatchedDendrogram("dendrogram was built from different data (fingerprint mismatch)")


def _finalize(n: int, slot_a, slot_b, cost, meta: dict | None = None) -> Dendrogram:
    """Sort slot-pair merges by cost (stable) and assign node ids."""
    order = np.argsort(cost, kind="stable")
    node_of = np.arange(n, dtype=np.int64)
    sizes = np.ones(2 * n - 1, dtype=np.int64)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    merged = np.empty(n - 1, dtype=np.int64)
    for m, idx in enumerate(order):
        a, b = int(slot_a[idx]), int(slot_b[idx])
        na, nb = node_of[a], node_of[b]
        left[m], right[m] = min(na, nb), max(na, nb)
        sizes[n + m] = sizes[na] + sizes[nb]
        merged[m] = sizes[n + m]
        node_of[min(a, b)] = n + m
    return Dendrogram(n, left, right, np.asarray(cost, dtype=np.float64)[order], merged, dict(meta or {}))


def _row_blocks(n: int, parts: int) -> list[tuple[int, int]]:
    # equal-work split of the upper triangle
    if parts <= 1 or n < 64:
        return [(0, n)]
    work = np.cumsum(np.arange(n - 1, -1, -1, dtype=np.float64))
    cuts = np.searchsorted(work, np.linspace(0, work[-1], parts + 1)[1:-1])
    bounds = [0, *sorted(set(int(c) for c in cuts)), n]
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _fill_condensed_dense(X: np.ndarray, kern, workers: int) -> np.ndarray:
    n = X.shape[0]
    D = np.empty(n * (n - 1) // 2, dtype=np.float64)
    blocks = _row_blocks(n, workers * 4 if workers > 1 else 1)
    if len(blocks) == 1:
        kern.fill_ward_condensed(X, D, 0, n)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ab: kern.fill_ward_condensed(X, D, ab[0], ab[1]), blocks))
    return D


def _fill_condensed_sparse(X: sp.csr_matrix, block: int = 512) -> np.ndarray:
    # term counts make the Gram expansion exact in float64
    n = X.shape[0]
    D = np.empty(n * (n - 1) // 2, dtype=np.float64)
    sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    XT = X.T.tocsc()
    pos = 0
    for start in range(0, n - 1, block):
        stop = min(start + block, n - 1)
        G = np.asarray((X[start:stop] @ XT).todense())
        for i in range(start, stop):
            g = G[i - start, i + 1 :]
            vals = 0.5 * (sq[i] + sq[i + 1 :] - 2.0 * g)
            np.maximum(vals, 0.0, out=vals)
            D[pos : pos + n - i - 1] = vals
            pos += n - i - 1
    return D


def ward_cluster(
    ds: EmbeddedDataset,
    *,
    low_memory: bool = False,
    workers: int = 1,
    backend: str | None = None,
) -> Dendrogram:
    """Ward clustering by nearest-neighbor chain, O(n^2) time.

    The default keeps a condensed store of all pairwise costs (n(n-1)/2
    doubles) updated with the Lance-Williams recurrence.  ``low_memory``
    recomputes costs from centroids instead: O(n d) memory, O(n^2 d) time.
    """
    kern = _backend.kernels(backend)
    n = ds.n
    if low_memory:
        X = np.ascontiguousarray(ds.dense_vectors(), dtype=np.float64)
        a, b, c = kern.nn_chain_centroid(X)
    else:
        if ds.is_sparse:
            D = _fill_condensed_sparse(ds.vectors)
        else:
            D = _fill_condensed_dense(np.ascontiguousarray(ds.vectors), kern, max(1, workers))
        a, b, c = kern.nn_chain_condensed(D, n)
        del D
    meta = {"fingerprint": ds.fingerprint(), "mode": "centroid" if low_memory else "condensed"}
    return _finalize(n, a, b, c, meta)


def naive_agglomerative(ds: EmbeddedDataset) -> Dendrogram:
    """Greedy O(n^3) Ward reference: every step rescans all cluster pairs.

    Costs are recomputed from the raw member points at each step.  Intended
    as a test oracle for :func:`ward_cluster`.
    """
    n = ds.n
    if n > ORACLE_MAX_N:
        raise TooLargeForOracle(f"oracle limited to n <= {ORACLE_MAX_N}, got {n}")
    X = ds.dense_vectors()
    members = {i: [i] for i in range(n)}
    height = {i: 0.0 for i in range(n)}
    slot_a, slot_b, costs = [], [], []
    for _ in range(n - 1):
        slots = sorted(members)
        cents = np.array([X[members[s]].mean(axis=0) for s in slots])
        sizes = np.array([len(members[s]) for s in slots], dtype=np.float64)
        diff = cents[:, None, :] - cents[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        ward = sizes[:, None] * sizes[None, :] / (sizes[:, None] + sizes[None, :]) * sq
        iu = np.triu_indices(len(slots), k=1)
        flat = ward[iu]
        best = int(np.argmin(flat))  # first minimum = smallest (slot_i, slot_j)
        i, j = slots[iu[0][best]], slots[iu[1][best]]
        c = max(float(flat[best]), height[i], height[j])
        slot_a.append(i)
        slot_b.append(j)
        costs.append(c)
        members[i] = members[i] + members.pop(j)
        height[i] = c
        del height[j]
    return _finalize(n, np.array(slot_a), np.array(slot_b), np.array(costs), {"fingerprint": ds.fingerprint(), "mode": "naive"})


@dataclass(frozen=True, eq=False)
class PartitionView:
    """One dendrogram level: ``k`` clusters numbered by their smallest member index."""

    k: int
    assignment: np.ndarray
    sizes: np.ndarray
    histograms: np.ndarray
    centroids: np.ndarray | sp.csr_matrix
    ssd: np.ndarray

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)


class _LevelState:
    """Cluster statistics maintained merge by merge."""

    def __init__(self, dn: Dendrogram, ds: EmbeddedDataset):
        dn.check_against(ds)
        n = ds.n
        self.n = n
        self.ds = ds
        self.dn = dn
        self.applied = 0
        self.sparse = ds.is_sparse
        self.node_slot = np.empty(2 * n - 1, dtype=np.int64)
        self.node_slot[:n] = np.arange(n)
        self.active = np.ones(n, dtype=bool)
        self.sizes = np.ones(n, dtype=np.int64)
        self.hist = np.zeros((n, ds.n_labels), dtype=np.int64)
        self.hist[np.arange(n), ds.labels] = 1
        # leaf -> group -> slot; groups relabel small-into-large
        self.group_of_leaf = np.arange(n, dtype=np.int64)
        self.group_slot = np.arange(n, dtype=np.int64)
        self.slot_group = np.arange(n, dtype=np.int64)
        self.group_members: list[list[int] | None] = [[i] for i in range(n)]
        if not self.sparse:
            self.cent = np.array(ds.vectors, dtype=np.float64, copy=True)
            self.ssd_arr = np.zeros(n)

    def apply(self, m: int) -> None:
        dn = self.dn
        a = int(self.node_slot[dn.left[m]])
        b = int(self.node_slot[dn.right[m]])
        s, t = min(a, b), max(a, b)
        self.node_slot[self.n + m] = s
        na, nb = self.sizes[a], self.sizes[b]
        if not self.sparse:
            diff = self.cent[a] - self.cent[b]
            self.ssd_arr[s] = self.ssd_arr[a] + self.ssd_arr[b] + na * nb / (na + nb) * float(diff @ diff)
            self.cent[s] = (na * self.cent[a] + nb * self.cent[b]) / (na + nb)
        self.sizes[s] = na + nb
        self.hist[s] = self.hist[a] + self.hist[b]
        self.active[t] = False
        ga, gb = int(self.slot_group[s]), int(self.slot_group[t])
        big, small = (ga, gb) if len(self.group_members[ga]) >= len(self.group_members[gb]) else (gb, ga)
        moved = self.group_members[small]
        self.group_of_leaf[moved] = big
        self.group_members[big].extend(moved)
        self.group_members[small] = None
        self.group_slot[big] = s
        self.slot_group[s] = big
        self.applied += 1

    def view(self) -> PartitionView:
        slots = np.flatnonzero(self.active)
        k = len(slots)
        rank = np.empty(self.n, dtype=np.int64)
        rank[slots] = np.arange(k)
        assignment = rank[self.group_slot[self.group_of_leaf]]
        sizes = self.sizes[slots].copy()
        hist = self.hist[slots].copy()
        if self.sparse:
            centroids, ssd = _sparse_centroids(self.ds.vectors, assignment, sizes, k)
        else:
            centroids = self.cent[slots].copy()
            ssd = self.ssd_arr[slots].copy()
        return PartitionView(k, assignment, sizes, hist, centroids, ssd)


def _sparse_centroids(X: sp.csr_matrix, assignment: np.ndarray, sizes: np.ndarray, k: int):
    n = X.shape[0]
    ind = sp.csr_matrix((np.ones(n), (assignment, np.arange(n))), shape=(k, n))
    scale = sp.diags(1.0 / sizes)
    cent = (scale @ (ind @ X)).tocsr()
    sq_rows = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    sq_cluster = np.bincount(assignment, weights=sq_rows, minlength=k)
    cent_sq = np.asarray(cent.multiply(cent).sum(axis=1)).ravel()
    ssd = np.maximum(sq_cluster - sizes * cent_sq, 0.0)
    if cent.nnz > SPARSE_DENSE_THRESHOLD * k * X.shape[1]:
        return cent.toarray(), ssd
    return cent, ssd


def partitions(dn: Dendrogram, ds: EmbeddedDataset) -> Iterator[PartitionView]:
    """Views for k = n, n-1, ..., 1, each reflecting one more merge."""
    state = _LevelState(dn, ds)
    yield state.view()
    for m in range(dn.n - 1):
        state.apply(m)
        yield state.view()


def cut(dn: Dendrogram, ds: EmbeddedDataset, k: int) -> PartitionView:
    if not 1 <= k <= dn.n:
        raise KOutOfRange(f"k={k} outside [1, {dn.n}]")
    state = _LevelState(dn, ds)
    for m in range(dn.n - k):
        state.apply(m)
    return state.view()
