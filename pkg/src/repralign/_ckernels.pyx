# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  ``_pykernels`` mirrors every function here in numpy.

Cluster storage uses *slots*: a cluster lives in the slot of its smallest
leaf index, so merging slots ``a`` and ``b`` leaves the result in
``min(a, b)``.  Ties between equal-cost merges go to the smaller slot pair.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.string cimport memmove

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64


cdef inline Py_ssize_t _cidx(Py_ssize_t n, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t a, b
    if i < j:
        a = i
        b = j
    else:
        a = j
        b = i
    return n * a - (a * (a + 1)) // 2 + b - a - 1


def fill_ward_condensed(const f64[:, ::1] X, f64[::1] out, Py_ssize_t start, Py_ssize_t stop):
    """Write half squared distances for rows ``start..stop`` into a condensed store."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, t, base
    cdef f64 s, diff
    with nogil:
        for i in range(start, stop):
            base = _cidx(n, i, i + 1) if i + 1 < n else 0
            for j in range(i + 1, n):
                s = 0.0
                for t in range(d):
                    diff = X[i, t] - X[j, t]
                    s = s + diff * diff
                out[base + j - i - 1] = 0.5 * s


cdef inline void _unlink(Py_ssize_t t, Py_ssize_t* nxt, Py_ssize_t* prv, Py_ssize_t* first) noexcept nogil:
    if prv[t] >= 0:
        nxt[prv[t]] = nxt[t]
    else:
        first[0] = nxt[t]
    if nxt[t] >= 0:
        prv[nxt[t]] = prv[t]


def nn_chain_condensed(f64[::1] D, Py_ssize_t n):
    """Ward NN-chain over a condensed Lance-Williams store (mutated in place).

    Returns slot pairs and costs in discovery order.
    """
    merge_a_arr = np.empty(max(n - 1, 0), dtype=np.int64)
    merge_b_arr = np.empty(max(n - 1, 0), dtype=np.int64)
    cost_arr = np.empty(max(n - 1, 0), dtype=np.float64)
    size_arr = np.ones(n, dtype=np.float64)
    height_arr = np.zeros(n, dtype=np.float64)
    nxt_arr = np.empty(n, dtype=np.intp)
    prv_arr = np.empty(n, dtype=np.intp)
    chain_arr = np.empty(n + 1, dtype=np.intp)

    cdef i64[::1] merge_a = merge_a_arr
    cdef i64[::1] merge_b = merge_b_arr
    cdef f64[::1] cost = cost_arr
    cdef f64[::1] size = size_arr
    cdef f64[::1] height = height_arr
    cdef Py_ssize_t[::1] nxt = nxt_arr
    cdef Py_ssize_t[::1] prv = prv_arr
    cdef Py_ssize_t[::1] chain = chain_arr

    cdef Py_ssize_t i, m, x, y, yb, k, s, t, clen = 0, first = 0
    cdef f64 best, dd, dxy, dxk, dyk, nx, ny, nk, c, val

    for i in range(n):
        nxt[i] = i + 1 if i + 1 < n else -1
        prv[i] = i - 1

    with nogil:
        for m in range(n - 1):
            if clen == 0:
                chain[0] = first
                clen = 1
            while True:
                x = chain[clen - 1]
                best = INFINITY
                yb = -1
                y = first
                while y >= 0:
                    if y != x:
                        dd = D[_cidx(n, x, y)]
                        if dd < best or yb < 0:
                            best = dd
                            yb = y
                    y = nxt[y]
                if clen >= 2 and yb == chain[clen - 2]:
                    break
                chain[clen] = yb
                clen += 1
            clen -= 2
            y = yb
            s = x if x < y else y
            t = y if x < y else x
            nx = size[x]
            ny = size[y]
            dxy = D[_cidx(n, x, y)]
            k = first
            while k >= 0:
                if k != x and k != y:
                    nk = size[k]
                    dxk = D[_cidx(n, x, k)]
                    dyk = D[_cidx(n, y, k)]
                    val = ((nx + nk) * dxk + (ny + nk) * dyk - nk * dxy) / (nx + ny + nk)
                    if val < 0.0:
                        val = 0.0
                    D[_cidx(n, s, k)] = val
                k = nxt[k]
            _unlink(t, &nxt[0], &prv[0], &first)
            size[s] = nx + ny
            c = dxy
            if height[x] > c:
                c = height[x]
            if height[y] > c:
                c = height[y]
            height[s] = c
            merge_a[m] = x
            merge_b[m] = y
            cost[m] = c
    return merge_a_arr, merge_b_arr, cost_arr


def nn_chain_centroid(const f64[:, ::1] X):
    """Low-memory Ward NN-chain recomputing costs from centroids and sizes."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cent_arr = np.array(X, dtype=np.float64, order="C", copy=True)
    merge_a_arr = np.empty(max(n - 1, 0), dtype=np.int64)
    merge_b_arr = np.empty(max(n - 1, 0), dtype=np.int64)
    cost_arr = np.empty(max(n - 1, 0), dtype=np.float64)
    size_arr = np.ones(n, dtype=np.float64)
    height_arr = np.zeros(n, dtype=np.float64)
    nxt_arr = np.empty(n, dtype=np.intp)
    prv_arr = np.empty(n, dtype=np.intp)
    chain_arr = np.empty(n + 1, dtype=np.intp)

    cdef f64[:, ::1] C = cent_arr
    cdef i64[::1] merge_a = merge_a_arr
    cdef i64[::1] merge_b = merge_b_arr
    cdef f64[::1] cost = cost_arr
    cdef f64[::1] size = size_arr
    cdef f64[::1] height = height_arr
    cdef Py_ssize_t[::1] nxt = nxt_arr
    cdef Py_ssize_t[::1] prv = prv_arr
    cdef Py_ssize_t[::1] chain = chain_arr

    cdef Py_ssize_t i, m, x, y, yb, s, t, q, clen = 0, first = 0
    cdef f64 best, dd, sq, diff, nx, ny, c

    for i in range(n):
        nxt[i] = i + 1 if i + 1 < n else -1
        prv[i] = i - 1

    with nogil:
        for m in range(n - 1):
            if clen == 0:
                chain[0] = first
                clen = 1
            while True:
                x = chain[clen - 1]
                best = INFINITY
                yb = -1
                y = first
                nx = size[x]
                while y >= 0:
                    if y != x:
                        sq = 0.0
                        for q in range(d):
                            diff = C[x, q] - C[y, q]
                            sq = sq + diff * diff
                        dd = nx * size[y] / (nx + size[y]) * sq
                        if dd < best or yb < 0:
                            best = dd
                            yb = y
                    y = nxt[y]
                if clen >= 2 and yb == chain[clen - 2]:
                    break
                chain[clen] = yb
                clen += 1
            clen -= 2
            y = yb
            s = x if x < y else y
            t = y if x < y else x
            nx = size[x]
            ny = size[y]
            sq = 0.0
            for q in range(d):
                diff = C[x, q] - C[y, q]
                sq = sq + diff * diff
            dd = nx * ny / (nx + ny) * sq
            for q in range(d):
                C[s, q] = (nx * C[x, q] + ny * C[y, q]) / (nx + ny)
            _unlink(t, &nxt[0], &prv[0], &first)
            size[s] = nx + ny
            c = dd
            if height[x] > c:
                c = height[x]
            if height[y] > c:
                c = height[y]
            height[s] = c
            merge_a[m] = x
            merge_b[m] = y
            cost[m] = c
    return merge_a_arr, merge_b_arr, cost_arr


cdef Py_ssize_t _find_block(f64* keys, Py_ssize_t nb, f64 key) noexcept nogil:
    # keys sorted descending; returns insertion point for key
    cdef Py_ssize_t lo = 0, hi = nb, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] > key:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _block_add(f64* keys, i64* tp, i64* cnt, Py_ssize_t nb,
                           f64 key, i64 dtp, i64 dcnt) noexcept nogil:
    cdef Py_ssize_t pos = _find_block(keys, nb, key)
    if pos < nb and keys[pos] == key:
        tp[pos] += dtp
        cnt[pos] += dcnt
        if cnt[pos] == 0:
            memmove(&keys[pos], &keys[pos + 1], (nb - pos - 1) * sizeof(f64))
            memmove(&tp[pos], &tp[pos + 1], (nb - pos - 1) * sizeof(i64))
            memmove(&cnt[pos], &cnt[pos + 1], (nb - pos - 1) * sizeof(i64))
            return nb - 1
        return nb
    memmove(&keys[pos + 1], &keys[pos], (nb - pos) * sizeof(f64))
    memmove(&tp[pos + 1], &tp[pos], (nb - pos) * sizeof(i64))
    memmove(&cnt[pos + 1], &cnt[pos], (nb - pos) * sizeof(i64))
    keys[pos] = key
    tp[pos] = dtp
    cnt[pos] = dcnt
    return nb + 1


cdef f64 _blocks_ap(i64* tp, i64* cnt, Py_ssize_t nb, i64 total_pos) noexcept nogil:
    cdef Py_ssize_t b
    cdef i64 cum_tp = 0, cum_cnt = 0
    cdef f64 ap = 0.0
    for b in range(nb):
        cum_tp += tp[b]
        cum_cnt += cnt[b]
        if tp[b] > 0:
            ap += (<f64>tp[b] / <f64>total_pos) * (<f64>cum_tp / <f64>cum_cnt)
    return ap


def alignment_sweep(const i64[::1] left, const i64[::1] right, const i64[::1] pos_leaf):
    """Tie-grouped average precision of cluster-frequency scores at every level.

    Returns ``values`` with ``values[k - 1] = a(P_k)``.  Distinct score values
    are kept in a sorted block list updated per merge, so a level costs
    O(#distinct scores) rather than a full sort.
    """
    cdef Py_ssize_t n = pos_leaf.shape[0]
    cdef Py_ssize_t m, l, r, node, nb = 0
    cdef i64 total_pos = 0
    out_arr = np.empty(n, dtype=np.float64)
    pos_arr = np.zeros(2 * n, dtype=np.int64)
    size_arr = np.ones(2 * n, dtype=np.int64)
    keys_arr = np.empty(n + 2, dtype=np.float64)
    tp_arr = np.empty(n + 2, dtype=np.int64)
    cnt_arr = np.empty(n + 2, dtype=np.int64)
    cdef f64[::1] out = out_arr
    cdef i64[::1] pos = pos_arr
    cdef i64[::1] size = size_arr
    cdef f64[::1] keys = keys_arr
    cdef i64[::1] tp = tp_arr
    cdef i64[::1] cnt = cnt_arr
    cdef f64 sl, sr, snew

    for m in range(n):
        pos[m] = 1 if pos_leaf[m] else 0
        total_pos += pos[m]
    if total_pos == 0 or total_pos == n:
        raise ValueError("alignment needs both positive and negative points")
    with nogil:
        nb = _block_add(&keys[0], &tp[0], &cnt[0], nb, 1.0, total_pos, total_pos)
        nb = _block_add(&keys[0], &tp[0], &cnt[0], nb, 0.0, 0, n - total_pos)
        out[n - 1] = _blocks_ap(&tp[0], &cnt[0], nb, total_pos)
        for m in range(n - 1):
            l = left[m]
            r = right[m]
            node = n + m
            sl = <f64>pos[l] / <f64>size[l]
            sr = <f64>pos[r] / <f64>size[r]
            nb = _block_add(&keys[0], &tp[0], &cnt[0], nb, sl, -pos[l], -size[l])
            nb = _block_add(&keys[0], &tp[0], &cnt[0], nb, sr, -pos[r], -size[r])
            pos[node] = pos[l] + pos[r]
            size[node] = size[l] + size[r]
            snew = <f64>pos[node] / <f64>size[node]
            nb = _block_add(&keys[0], &tp[0], &cnt[0], nb, snew, pos[node], size[node])
            out[n - m - 2] = _blocks_ap(&tp[0], &cnt[0], nb, total_pos)
    return out_arr


cdef inline f64 _ratio(f64 spread, f64 dist) noexcept nogil:
    if dist > 0.0:
        return spread / dist
    if spread > 0.0:
        return INFINITY
    return 0.0


cdef inline f64 _centroid_dist(f64[:, ::1] C, Py_ssize_t a, Py_ssize_t b, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t q
    cdef f64 s = 0.0, diff
    for q in range(d):
        diff = C[a, q] - C[b, q]
        s = s + diff * diff
    return sqrt(s)


def dbi_sweep(const f64[:, ::1] X, const i64[::1] left, const i64[::1] right, const cnp.uint8_t[::1] evaluate):
    """Davies-Bouldin index at every level flagged in ``evaluate`` (indexed by k).

    Each cluster keeps the worst ratio against any partner and which partner
    attains it; after a merge only rows whose worst partner died are rescanned.
    Returns an array indexed by k with NaN at skipped levels.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cent_arr = np.array(X, dtype=np.float64, order="C", copy=True)
    out_arr = np.full(n + 1, np.nan, dtype=np.float64)
    cdef f64[:, ::1] C = cent_arr
    cdef f64[::1] out = out_arr
    sigma_arr = np.zeros(n, dtype=np.float64)
    size_arr = np.ones(n, dtype=np.float64)
    rowmax_arr = np.zeros(n, dtype=np.float64)
    rowarg_arr = np.full(n, -1, dtype=np.intp)
    slot_arr = np.empty(2 * n, dtype=np.intp)
    nxt_arr = np.empty(n, dtype=np.intp)
    prv_arr = np.empty(n, dtype=np.intp)
    mnext_arr = np.full(n, -1, dtype=np.intp)
    mtail_arr = np.arange(n, dtype=np.intp)
    marked_arr = np.empty(n, dtype=np.intp)
    cdef f64[::1] sigma = sigma_arr
    cdef f64[::1] size = size_arr
    cdef f64[::1] rowmax = rowmax_arr
    cdef Py_ssize_t[::1] rowarg = rowarg_arr
    cdef Py_ssize_t[::1] slot = slot_arr
    cdef Py_ssize_t[::1] nxt = nxt_arr
    cdef Py_ssize_t[::1] prv = prv_arr
    cdef Py_ssize_t[::1] mnext = mnext_arr
    cdef Py_ssize_t[::1] mtail = mtail_arr
    cdef Py_ssize_t[::1] marked = marked_arr

    cdef Py_ssize_t i, j, q, m, a, b, s, t, k, first = 0, nmarked, mi, arg
    cdef f64 na, nb_, acc, diff, sq, r, best, total

    for i in range(n):
        nxt[i] = i + 1 if i + 1 < n else -1
        prv[i] = i - 1
        slot[i] = i

    with nogil:
        k = n
        if evaluate[k] and k >= 2:
            out[k] = 0.0
        for m in range(n - 1):
            a = slot[left[m]]
            b = slot[right[m]]
            s = a if a < b else b
            t = b if a < b else a
            slot[n + m] = s
            na = size[a]
            nb_ = size[b]
            for q in range(d):
                C[s, q] = (na * C[a, q] + nb_ * C[b, q]) / (na + nb_)
            # member lists: s's members then t's
            mnext[mtail[s]] = t
            mtail[s] = mtail[t]
            size[s] = na + nb_
            acc = 0.0
            i = s
            while i >= 0:
                sq = 0.0
                for q in range(d):
                    diff = X[i, q] - C[s, q]
                    sq = sq + diff * diff
                acc = acc + sqrt(sq)
                i = mnext[i]
            sigma[s] = acc / size[s]
            _unlink(t, &nxt[0], &prv[0], &first)
            k = n - m - 1
            if k < 2:
                break

            nmarked = 0
            best = -1.0
            arg = -1
            j = first
            while j >= 0:
                if j != s:
                    r = _ratio(sigma[s] + sigma[j], _centroid_dist(C, s, j, d))
                    if r > best:
                        best = r
                        arg = j
                    if rowarg[j] == s or rowarg[j] == t:
                        marked[nmarked] = j
                        nmarked += 1
                    elif r > rowmax[j]:
                        rowmax[j] = r
                        rowarg[j] = s
                j = nxt[j]
            rowmax[s] = best
            rowarg[s] = arg

            for mi in range(nmarked):
                i = marked[mi]
                best = -1.0
                arg = -1
                j = first
                while j >= 0:
                    if j != i:
                        r = _ratio(sigma[i] + sigma[j], _centroid_dist(C, i, j, d))
                        if r > best:
                            best = r
                            arg = j
                    j = nxt[j]
                rowmax[i] = best
                rowarg[i] = arg

            if evaluate[k]:
                total = 0.0
                j = first
                while j >= 0:
                    total = total + rowmax[j]
                    j = nxt[j]
                out[k] = total / k
    return out_arr
