"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same signatures, same slot and tie-breaking conventions; results agree with
the compiled path up to floating-point summation order.
"""

from __future__ import annotations

import numpy as np


def _row_starts(n: int) -> np.ndarray:
    # condensed index of (i, j), i < j, is row_start[i] + j
    i = np.arange(n, dtype=np.int64)
    return n * i - (i * (i + 1)) // 2 - i - 1


def fill_ward_condensed(X: np.ndarray, out: np.ndarray, start: int, stop: int) -> None:
    n = X.shape[0]
    rs = _row_starts(n)
    for i in range(start, min(stop, n - 1)):
        diff = X[i + 1 :] - X[i]
        out[rs[i] + i + 1 : rs[i] + n] = 0.5 * np.einsum("ij,ij->i", diff, diff)


def _pair_index(rs: np.ndarray, x: int, ys: np.ndarray) -> np.ndarray:
    return np.where(ys < x, rs[ys] + x, rs[x] + ys)


def nn_chain_condensed(D: np.ndarray, n: int):
    rs = _row_starts(n)
    size = np.ones(n)
    height = np.zeros(n)
    active = np.arange(n, dtype=np.int64)
    merge_a = np.empty(max(n - 1, 0), dtype=np.int64)
    merge_b = np.empty(max(n - 1, 0), dtype=np.int64)
    cost = np.empty(max(n - 1, 0))
    chain: list[int] = []
    for m in range(n - 1):
        if not chain:
            chain.append(int(active[0]))
        while True:
            x = chain[-1]
            others = active[active != x]
            vals = D[_pair_index(rs, x, others)]
            y = int(others[int(np.argmin(vals))])
            if len(chain) >= 2 and y == chain[-2]:
                break
            chain.append(y)
        chain.pop()
        chain.pop()
        s, t = min(x, y), max(x, y)
        nx, ny = size[x], size[y]
        dxy = D[_pair_index(rs, x, np.array([y]))[0]]
        ks = active[(active != x) & (active != y)]
        nk = size[ks]
        dxk = D[_pair_index(rs, x, ks)]
        dyk = D[_pair_index(rs, y, ks)]
        val = ((nx + nk) * dxk + (ny + nk) * dyk - nk * dxy) / (nx + ny + nk)
        D[_pair_index(rs, s, ks)] = np.maximum(val, 0.0)
        active = active[active != t]
        size[s] = nx + ny
        c = max(dxy, height[x], height[y])
        height[s] = c
        merge_a[m], merge_b[m], cost[m] = x, y, c
    return merge_a, merge_b, cost


def nn_chain_centroid(X: np.ndarray):
    n = X.shape[0]
    C = np.array(X, dtype=np.float64, copy=True)
    size = np.ones(n)
    height = np.zeros(n)
    active = np.arange(n, dtype=np.int64)
    merge_a = np.empty(max(n - 1, 0), dtype=np.int64)
    merge_b = np.empty(max(n - 1, 0), dtype=np.int64)
    cost = np.empty(max(n - 1, 0))
    chain: list[int] = []
    for m in range(n - 1):
        if not chain:
            chain.append(int(active[0]))
        while True:
            x = chain[-1]
            others = active[active != x]
            diff = C[others] - C[x]
            sq = np.einsum("ij,ij->i", diff, diff)
            vals = size[x] * size[others] / (size[x] + size[others]) * sq
            y = int(others[int(np.argmin(vals))])
            if len(chain) >= 2 and y == chain[-2]:
                break
            chain.append(y)
        chain.pop()
        chain.pop()
        s, t = min(x, y), max(x, y)
        nx, ny = size[x], size[y]
        diff = C[x] - C[y]
        dd = nx * ny / (nx + ny) * float(diff @ diff)
        C[s] = (nx * C[x] + ny * C[y]) / (nx + ny)
        active = active[active != t]
        size[s] = nx + ny
        c = max(dd, height[x], height[y])
        height[s] = c
        merge_a[m], merge_b[m], cost[m] = x, y, c
    return merge_a, merge_b, cost


def blocks_average_precision(scores: np.ndarray, tp: np.ndarray, cnt: np.ndarray, total_pos: int) -> float:
    """Tie-grouped AP from per-group (score, positives, count) triples."""
    uniq, inv = np.unique(scores, return_inverse=True)
    btp = np.bincount(inv, weights=tp)[::-1]
    bcnt = np.bincount(inv, weights=cnt)[::-1]
    cum_tp = np.cumsum(btp)
    cum_cnt = np.cumsum(bcnt)
    keep = btp > 0
    return float(np.sum((btp[keep] / total_pos) * (cum_tp[keep] / cum_cnt[keep])))


def alignment_sweep(left: np.ndarray, right: np.ndarray, pos_leaf: np.ndarray) -> np.ndarray:
    n = pos_leaf.shape[0]
    pos = np.zeros(2 * n, dtype=np.int64)
    size = np.ones(2 * n, dtype=np.int64)
    pos[:n] = pos_leaf != 0
    total_pos = int(pos[:n].sum())
    if total_pos == 0 or total_pos == n:
        raise ValueError("alignment needs both positive and negative points")
    active = np.zeros(2 * n, dtype=bool)
    active[:n] = True
    out = np.empty(n)
    out[n - 1] = 1.0 if total_pos else 0.0
    for m in range(n - 1):
        l, r = left[m], right[m]
        node = n + m
        pos[node] = pos[l] + pos[r]
        size[node] = size[l] + size[r]
        active[l] = active[r] = False
        active[node] = True
        idx = np.flatnonzero(active)
        out[n - m - 2] = blocks_average_precision(pos[idx] / size[idx], pos[idx], size[idx], total_pos)
    return out


def _ratios(spread: np.ndarray, dist: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = spread / dist
    zero = dist == 0.0
    r[zero] = np.where(spread[zero] > 0.0, np.inf, 0.0)
    return r


def dbi_sweep(X: np.ndarray, left: np.ndarray, right: np.ndarray, evaluate: np.ndarray) -> np.ndarray:
    n, d = X.shape
    C = np.array(X, dtype=np.float64, copy=True)
    out = np.full(n + 1, np.nan)
    sigma = np.zeros(n)
    size = np.ones(n)
    rowmax = np.zeros(n)
    rowarg = np.full(n, -1, dtype=np.int64)
    slot = np.empty(2 * n, dtype=np.int64)
    slot[:n] = np.arange(n)
    members: list[list[int] | None] = [[i] for i in range(n)]
    active = np.arange(n, dtype=np.int64)
    if n >= 2 and evaluate[n]:
        out[n] = 0.0
    for m in range(n - 1):
        a, b = slot[left[m]], slot[right[m]]
        s, t = min(a, b), max(a, b)
        slot[n + m] = s
        na, nb = size[a], size[b]
        C[s] = (na * C[a] + nb * C[b]) / (na + nb)
        members[s] = members[s] + members[t]
        members[t] = None
        size[s] = na + nb
        diff = X[members[s]] - C[s]
        sigma[s] = np.sqrt(np.einsum("ij,ij->i", diff, diff)).sum() / size[s]
        active = active[active != t]
        k = n - m - 1
        if k < 2:
            break
        others = active[active != s]
        diff = C[others] - C[s]
        r = _ratios(sigma[s] + sigma[others], np.sqrt(np.einsum("ij,ij->i", diff, diff)))
        j = int(np.argmax(r))
        rowmax[s], rowarg[s] = r[j], others[j]
        stale = (rowarg[others] == s) | (rowarg[others] == t)
        better = ~stale & (r > rowmax[others])
        rowmax[others[better]] = r[better]
        rowarg[others[better]] = s
        for i in others[stale]:
            rest = active[active != i]
            diff = C[rest] - C[i]
            ri = _ratios(sigma[i] + sigma[rest], np.sqrt(np.einsum("ij,ij->i", diff, diff)))
            j = int(np.argmax(ri))
            rowmax[i], rowarg[i] = ri[j], rest[j]
        if evaluate[k]:
            out[k] = rowmax[active].sum() / k
    return out
