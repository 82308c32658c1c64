import logging

import numpy as np
import pytest

from repralign.core import validate_dataset
from repralign.errors import KTooSmall
from repralign.hierclust import Dendrogram, cut, ward_cluster
from repralign.quality import dbi, dbi_curve

from conftest import make_dataset


def dbi_oracle(X, assignment):
    """Davies-Bouldin straight from the definition, with Python loops."""
    k = int(assignment.max()) + 1
    cents = [X[assignment == j].mean(axis=0) for j in range(k)]
    sig = [np.mean([np.linalg.norm(x - cents[j]) for x in X[assignment == j]]) for j in range(k)]
    total = 0.0
    for i in range(k):
        worst = -np.inf
        for j in range(k):
            if i != j:
                dist = np.linalg.norm(cents[i] - cents[j])
                s = sig[i] + sig[j]
                r = (np.inf if s > 0 else 0.0) if dist == 0 else s / dist
                worst = max(worst, r)
        total += worst
    return total / k


def test_direct_matches_oracle(small_ds):
    dn = ward_cluster(small_ds)
    for k in (2, 3, 7, 20, small_ds.n):
        pv = cut(dn, small_ds, k)
        assert dbi(pv, small_ds) == pytest.approx(dbi_oracle(small_ds.vectors, pv.assignment), rel=1e-9, abs=1e-12)


def test_curve_matches_cuts(backend):
    ds = make_dataset(n=50, d=3, seed=4)
    dn = ward_cluster(ds)
    res = dbi_curve(ds, dn, backend=backend)
    assert np.array_equal(res.curve.index, np.arange(2, 51))
    for k, v in zip(res.curve.index, res.curve.values):
        assert v == pytest.approx(dbi(cut(dn, ds, int(k)), ds), rel=1e-9, abs=1e-12)
    assert res.adbi == pytest.approx(res.curve.values.mean())
    # singletons have zero spread, so the finest level scores 0
    assert res.curve.values[-1] == 0.0


def test_stride(backend):
    ds = make_dataset(n=41, d=2, seed=6)
    dn = ward_cluster(ds)
    full = dbi_curve(ds, dn, backend=backend)
    strided = dbi_curve(ds, dn, k_stride=5, backend=backend)
    assert np.array_equal(strided.curve.index, np.arange(2, 42, 5))
    assert np.allclose(strided.curve.values, full.curve.values[::5])
    assert strided.adbi == pytest.approx(full.curve.values[::5].mean())


def test_k_too_small(small_ds):
    pv = cut(ward_cluster(small_ds), small_ds, 1)
    with pytest.raises(KTooSmall):
        dbi(pv, small_ds)


def test_coincident_centroids_excluded(backend, caplog):
    # hand-built tree: at k=3 the clusters {0,1} and {2,3} share the centroid (0,0)
    X = np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [10, 10]], dtype=float)
    ds = validate_dataset(X, [0, 1, 0, 1, 1], ["a", "b"], 1)
    dn = Dendrogram(5, np.array([0, 2, 5, 4]), np.array([1, 3, 6, 7]), np.array([1.0, 1.0, 2.0, 150.0]), np.array([2, 2, 4, 5]))
    with caplog.at_level(logging.WARNING):
        res = dbi_curve(ds, dn, backend=backend)
    vals = res.curve.values
    assert np.isinf(vals[1]) and res.n_infinite == 1
    assert "excluded" in caplog.text
    assert res.adbi == pytest.approx(vals[np.isfinite(vals)].mean())
    assert np.isinf(dbi(cut(dn, ds, 3), ds))


def test_duplicate_points_ratio_is_zero(backend):
    X = np.array([[0, 0], [0, 0], [5, 5]], dtype=float)
    ds = validate_dataset(X, [0, 1, 1], ["a", "b"], 1)
    dn = Dendrogram(3, np.array([0, 2]), np.array([1, 3]), np.array([0.0, 33.3]), np.array([2, 3]))
    assert dbi_curve(ds, dn, backend=backend).curve.values[-1] == 0.0


def test_invariances(backend):
    ds = make_dataset(n=40, d=3, seed=8)
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    base = dbi_curve(ds, ward_cluster(ds), backend=backend).curve.values
    for X in (ds.vectors + 5.0, ds.vectors @ Q, 3.5 * ds.vectors):
        moved = validate_dataset(X, ds.labels, ds.label_vocab, ds.positive_class)
        vals = dbi_curve(moved, ward_cluster(moved), backend=backend).curve.values
        assert np.allclose(vals, base, rtol=1e-9, atol=1e-12)
