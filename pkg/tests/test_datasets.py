import numpy as np
import pytest

from trained_schemes.datasets import (Dataset, KLData, RoughData, SodData,
                                      eval_kl, eval_rough, eval_sod,
                                      sample_dataset, stream)
from trained_schemes.errors import InvalidSampleError


def test_eval_kl_examples():
    assert eval_kl(KLData([0, 0, 0]), 0.7) == 0.0
    assert eval_kl(KLData([1, 0, 0]), 0.5) == pytest.approx(1.0)
    expected = np.sin(np.pi / 4) + 0.5 * np.sin(np.pi / 2) + 0.25 * np.sin(3 * np.pi / 4)
    assert eval_kl(KLData([1, 1, 1]), 0.25) == pytest.approx(expected)
    assert expected == pytest.approx(1.38388, abs=1e-5)


def test_eval_rough_examples():
    d = RoughData([0, 0, 0])
    assert eval_rough(d, 0.5) == 1.0
    assert eval_rough(d, 0.2) == 0.0
    d = RoughData([1, -1, 1])
    # left edge 1/3 - 0.2 = 0.1333..., amplitude 1.2
    assert eval_rough(d, 0.14) == pytest.approx(1.2)
    assert eval_rough(d, 0.12) == 0.0


def test_rough_degenerate_interval_rejected():
    with pytest.raises(InvalidSampleError):
        RoughData([0.0, 1.0, -1.0])   # left edge 0.533 > right edge 0.467


def test_eval_sod_examples():
    d = SodData(np.zeros(5))
    rho, v, p = eval_sod(d, np.array([0.25, 0.75]))
    assert (rho[0], v[0], p[0]) == (1.0, 0.0, 1.0)
    assert (rho[1], v[1], p[1]) == pytest.approx((0.4, 0.0, 0.4))
    d = SodData(np.ones(5))
    rho, v, p = eval_sod(d, 0.59)   # interface at 0.6
    assert rho == pytest.approx(1.1)
    assert p == pytest.approx(1.1)
    assert v == 0.0


def test_sod_invariants():
    with pytest.raises(InvalidSampleError):
        SodData([0, 0, -5, 0, 0])   # rho_r = 0.4 - 0.5 < 0
    with pytest.raises(InvalidSampleError):
        SodData([0, 1, 0, 0, 0], eps=0.6)   # interface at 1.1


def test_sample_dataset_deterministic():
    a = sample_dataset("kl", 20, 100, seed=7)
    b = sample_dataset("kl", 20, 100, seed=7)
    np.testing.assert_array_equal(a.train, b.train)
    np.testing.assert_array_equal(a.test, b.test)
    c = sample_dataset("kl", 20, 100, seed=8)
    assert not np.array_equal(a.train, c.train)


def test_sample_dataset_shapes_and_ranges():
    ds = sample_dataset("kl", 20, 100, seed=1)
    assert ds.train.shape == (20, 3) and ds.test.shape == (100, 3)
    assert ds.train.min() >= 0.0 and ds.train.max() <= 1.0
    ds = sample_dataset("sod", 50, 1000, seed=2)
    assert ds.train.shape == (50, 5) and ds.test.shape == (1000, 5)
    assert ds.test.min() >= -1.0 and ds.test.max() <= 1.0
    ds = sample_dataset("scalar_u0", 10, 50, seed=3,
                        train_range=(0.0, 2.0), test_range=(-5.0, 5.0))
    assert ds.train.min() >= 0.0 and ds.train.max() <= 2.0
    assert ds.test.min() >= -5.0 and ds.test.max() <= 5.0


def test_sample_dataset_disjoint():
    ds = sample_dataset("rough", 30, 200, seed=11)
    train_rows = {tuple(r) for r in ds.train}
    for row in ds.test:
        assert tuple(row) not in train_rows


def test_rough_samples_always_valid():
    ds = sample_dataset("rough", 50, 500, seed=5)
    for row in np.vstack([ds.train, ds.test]):
        RoughData(row)   # must not raise


def test_empirical_means():
    # uniform on [lo, hi]: mean (lo+hi)/2, sd (hi-lo)/sqrt(12)
    n = 10000
    gen = stream(123, 0)
    draws = gen.uniform(-1.0, 1.0, n)
    se = (2.0 / np.sqrt(12.0)) / np.sqrt(n)
    assert abs(draws.mean() - 0.0) < 3 * se
    ds = sample_dataset("kl", 1, n, seed=42)
    se = (1.0 / np.sqrt(12.0)) / np.sqrt(n * 3)
    assert abs(ds.test.mean() - 0.5) < 3 * se


def test_streams_are_independent():
    a = stream(9, 0).uniform(size=8)
    b = stream(9, 1).uniform(size=8)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, stream(9, 0).uniform(size=8))


def test_json_round_trip():
    ds = sample_dataset("sod", 5, 7, seed=3)
    back = Dataset.from_json(ds.to_json())
    assert back.family == "sod" and back.seed == 3
    np.testing.assert_array_equal(back.train, ds.train)
    np.testing.assert_array_equal(back.test, ds.test)


def test_unknown_family():
    with pytest.raises(ValueError):
        sample_dataset("nope", 1, 1, seed=0)
