import math

import numpy as np
import pytest

from repralign.rng import Xoshiro256, derive_seed, splitmix64


def test_splitmix64_reference_value():
    _, out = splitmix64(0)
    assert out == 0xE220A8397B1DCDAF


def test_xoshiro_reference_sequence():
    g = Xoshiro256(0)
    g._s = [1, 2, 3, 4]
    assert [g.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def test_same_seed_same_stream():
    a, b = Xoshiro256(42), Xoshiro256(42)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]
    assert Xoshiro256(43).next_u64() != Xoshiro256(42).next_u64()


def test_derive_seed_separates_keys():
    seeds = {derive_seed(0, s, n) for s in range(5) for n in range(100, 1001, 100)}
    assert len(seeds) == 50
    assert derive_seed(3, 1, 2) != derive_seed(3, 2, 1)


def test_below_is_uniform():
    g = Xoshiro256(1)
    counts = np.bincount([g.below(7) for _ in range(70000)], minlength=7)
    chi2 = float(((counts - 10000) ** 2 / 10000).sum())
    assert chi2 < 22.5  # 6 dof, p ~ 0.001


def test_random_in_unit_interval():
    g = Xoshiro256(5)
    xs = [g.random() for _ in range(5000)]
    assert 0.0 <= min(xs) and max(xs) < 1.0
    assert abs(np.mean(xs) - 0.5) < 0.02


def test_sample_indices_distinct_and_in_range():
    g = Xoshiro256(9)
    idx = g.sample_indices(1000, 300)
    assert len(set(idx)) == 300
    assert min(idx) >= 0 and max(idx) < 1000
    assert sorted(Xoshiro256(9).sample_indices(10, 10)) == list(range(10))
    with pytest.raises(ValueError):
        g.sample_indices(5, 6)


def test_sample_overlap_is_hypergeometric():
    # two independent 5000-of-20000 draws overlap by 1250 on average, sd about 26.5
    overlaps = []
    for s in range(20):
        a = set(Xoshiro256(derive_seed(s, 1)).sample_indices(20000, 5000))
        b = set(Xoshiro256(derive_seed(s, 2)).sample_indices(20000, 5000))
        overlaps.append(len(a & b))
    sd = math.sqrt(5000 * 0.25 * 0.75 * 15000 / 19999)
    assert abs(np.mean(overlaps) - 1250) < 4 * sd / math.sqrt(20)
    assert all(abs(o - 1250) < 6 * sd for o in overlaps)


def test_shuffle_is_permutation():
    items = list(range(50))
    Xoshiro256(3).shuffle(items)
    assert sorted(items) == list(range(50)) and items != list(range(50))
