import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from eco.numerics import (
    RngKey,
    as_tensor,
    cosine_similarity,
    key_hash,
    keyed_uniform,
    relative_norm,
    uniform_array,
)


def test_keyed_uniform_is_pure():
    key = RngKey(seed=7, step=3, tensor_id=2, index=9)
    assert keyed_uniform(key) == keyed_uniform(key)


def test_keyed_uniform_range():
    us = uniform_array(1, 2, 3, 10_000)
    assert np.all(us >= 0.0) and np.all(us < 1.0)


def test_adjacent_indices_never_collide():
    # 1e6 adjacent-index pairs; collision probability per pair is ~2^-53
    us = uniform_array(seed=5, step=0, tensor_id=0, n=1_000_001)
    assert np.all(us[1:] != us[:-1])


def test_mean_of_uniform_draws():
    n = 1_000_000
    us = uniform_array(seed=0, step=0, tensor_id=0, n=n)
    tol = 3.0 / np.sqrt(12.0 * n)
    assert abs(us.mean() - 0.5) <= tol


def test_chi_square_uniformity():
    us = uniform_array(seed=42, step=0, tensor_id=0, n=1_000_000)
    counts, _ = np.histogram(us, bins=100, range=(0.0, 1.0))
    stat, _ = stats.chisquare(counts)
    assert stat < stats.chi2.ppf(0.99, 99)


def test_vectorized_matches_scalar():
    scalars = [keyed_uniform(RngKey(seed=9, step=4, tensor_id=1, index=i + 5)) for i in range(64)]
    vector = uniform_array(seed=9, step=4, tensor_id=1, n=64, base_index=5)
    assert np.array_equal(np.array(scalars), vector)


def test_key_fields_all_matter():
    base = key_hash(1, 2, 3, 4)
    assert base != key_hash(2, 2, 3, 4)
    assert base != key_hash(1, 3, 3, 4)
    assert base != key_hash(1, 2, 4, 4)
    assert base != key_hash(1, 2, 3, 5)


def test_cosine_similarity_examples():
    v = np.array([1.0, 2.0, -3.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)
    assert cosine_similarity(v, -v) == pytest.approx(-1.0, abs=1e-12)
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0, abs=1e-15)


def test_cosine_similarity_zero_norm_raises():
    with pytest.raises(ValueError):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])


@given(
    st.floats(min_value=1e-3, max_value=1e3),
    st.floats(min_value=1e-3, max_value=1e3),
    st.integers(min_value=0, max_value=2**31),
)
def test_cosine_similarity_scale_invariant(a_scale, b_scale, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=5) + 1e-6
    b = rng.normal(size=5) + 1e-6
    assert cosine_similarity(a_scale * a, b_scale * b) == pytest.approx(
        cosine_similarity(a, b), abs=1e-12)


def test_relative_norm_examples():
    v = np.array([1.0, -2.0])
    assert relative_norm(v, v) == pytest.approx(1.0)
    assert relative_norm(2 * v, v) == pytest.approx(2.0)
    assert relative_norm([3.0, 4.0], [1.0, 0.0]) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        relative_norm(v, np.zeros(2))


def test_as_tensor_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_tensor([1.0, np.nan])
    with pytest.raises(ValueError):
        as_tensor([np.inf])
