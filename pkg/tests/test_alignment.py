import numpy as np
import pytest

from repralign.alignment import (
    average_precision,
    label_scores,
    partition_alignment,
    thas,
    thas_all_labels,
    thas_averaged,
)
from repralign.core import validate_dataset
from repralign.errors import DegenerateLabels, EmptyRuns, MismatchedPartition
from repralign.hierclust import cut, partitions, ward_cluster

from conftest import make_dataset


def test_ap_known_values():
    assert average_precision([3, 2, 1], [1, 0, 1]) == pytest.approx(0.5 + 0.5 * 2 / 3)
    assert average_precision([1, 1, 1, 1], [1, 0, 0, 0]) == 0.25
    assert average_precision([0.9, 0.1], [1, 0]) == 1.0
    # a tie between a positive and a negative at the top counts as one block
    assert average_precision([2, 2, 1], [1, 0, 1]) == pytest.approx(0.5 * 0.5 + 0.5 * 2 / 3)


def test_ap_rejects_single_class():
    with pytest.raises(DegenerateLabels):
        average_precision([1, 2, 3], [0, 0, 0])


def test_label_scores_are_cluster_frequencies(small_ds):
    dn = ward_cluster(small_ds)
    pv = cut(dn, small_ds, 5)
    sc = label_scores(pv, small_ds)
    for j in range(pv.k):
        members = pv.members(j)
        frac = np.mean(small_ds.labels[members] == 1)
        assert np.allclose(sc.column(1)[members], frac)
    assert np.allclose(sc.scores.sum(axis=1), 1.0)


def test_endpoints(backend, small_ds):
    dn = ward_cluster(small_ds)
    res = thas(small_ds, dn, backend=backend)
    assert res.curve.values[-1] == 1.0
    assert res.curve.values[0] == small_ds.prevalence
    assert np.array_equal(res.curve.index, np.arange(1, small_ds.n + 1))
    assert res.thas == pytest.approx(res.curve.values.mean())


def test_sweep_matches_direct(backend):
    for seed in range(4):
        ds = make_dataset(n=70, d=3, seed=seed, n_labels=3)
        dn = ward_cluster(ds)
        for label in range(3):
            if not 0 < np.count_nonzero(ds.labels == label) < ds.n:
                continue
            fast = thas(ds, dn, label, backend=backend).curve.values
            direct = [partition_alignment(pv, ds, label) for pv in partitions(dn, ds)][::-1]
            assert np.allclose(fast, direct, rtol=0, atol=1e-12)


def test_backends_agree():
    ds = make_dataset(n=400, d=6, seed=5)
    dn = ward_cluster(ds)
    a = thas(ds, dn, backend="python").curve.values
    from repralign import _backend

    for b in _backend.available():
        assert np.allclose(thas(ds, dn, backend=b).curve.values, a, atol=1e-12)


def test_aligned_structure_scores_higher():
    aligned = make_dataset(n=200, d=3, seed=1, shift=8.0)
    random_ = make_dataset(n=200, d=3, seed=1, shift=0.0)
    t_al = thas(aligned, ward_cluster(aligned)).thas
    t_rand = thas(random_, ward_cluster(random_)).thas
    assert t_al > 0.95 > t_rand


def test_all_labels_mean():
    ds = make_dataset(n=90, d=3, seed=2, n_labels=3)
    dn = ward_cluster(ds)
    results, mean = thas_all_labels(ds, dn)
    assert set(results) == {0, 1, 2}
    assert mean == pytest.approx(np.mean([r.thas for r in results.values()]))


def test_absent_label_rejected():
    X = np.random.default_rng(0).normal(size=(10, 2))
    ds = validate_dataset(X, [0, 1] * 5, ["a", "b", "c"], 1)
    with pytest.raises(DegenerateLabels):
        thas(ds, ward_cluster(ds), label=2)


def test_mismatched_partition(small_ds):
    pv = cut(ward_cluster(small_ds), small_ds, 3)
    other = make_dataset(n=small_ds.n + 1)
    with pytest.raises(MismatchedPartition):
        partition_alignment(pv, other)


def test_thas_averaged():
    s = thas_averaged([0.5, 0.7, 0.6])
    assert s.mean == pytest.approx(0.6)
    assert s.spread == pytest.approx(0.1)
    assert s.spread_defined
    one = thas_averaged([0.4])
    assert one.spread == 0.0 and not one.spread_defined
    with pytest.raises(EmptyRuns):
        thas_averaged([])
