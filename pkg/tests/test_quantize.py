import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eco.numerics import RngKey, uniform_array
from eco.quantize import (
    FP8_MAX,
    Fp8E4M3,
    FixedStep,
    Granularity,
    Identity,
    IntSymmetric,
    NoiseModel,
    QuantSpec,
    Rounding,
    UniformMax,
    compute_scale,
    e4m3_magnitudes,
    fp8_nearest,
    quantize,
    round_rtn,
    round_sr,
)


class TestScale:
    def test_tensorwise(self):
        s = compute_scale([1.0, -0.4, 2.0], rho=2.0)
        assert np.array_equal(s, [1.0])

    def test_all_zero_sentinel(self):
        assert np.array_equal(compute_scale([0.0, 0.0, 0.0], rho=3.0), [0.0])

    def test_rowwise(self):
        s = compute_scale(np.array([[1.0, -1.0], [4.0, 2.0]]), 2.0, Granularity.ROW)
        assert np.allclose(s, [0.5, 2.0])

    def test_rowwise_needs_2d(self):
        with pytest.raises(ValueError):
            compute_scale([1.0, 2.0], 2.0, Granularity.ROW)


class TestRounding:
    def test_rtn_ties_to_even(self):
        assert np.array_equal(round_rtn([0.5, 1.5, 2.5, -0.5]), [0.0, 2.0, 2.0, -0.0])

    def test_sr_on_grid_fixed_point(self):
        assert round_sr(3.0, 0.999) == 3.0
        assert round_sr(3.0, 0.0) == 3.0

    def test_sr_threshold_rule(self):
        assert round_sr(1.4, 0.2) == 2.0
        assert round_sr(1.4, 0.7) == 1.0

    def test_sr_unbiased_in_expectation(self):
        us = uniform_array(seed=3, step=0, tensor_id=0, n=1_000_000)
        mean = float(np.mean(round_sr(np.full(us.shape, 1.4), us)))
        assert mean == pytest.approx(1.4, abs=0.002)

    @given(st.floats(-1e6, 1e6), st.floats(0, 1, exclude_max=True))
    def test_sr_returns_adjacent_integer(self, y, u):
        r = float(round_sr(y, u))
        assert r in (np.floor(y), np.floor(y) + 1)


class TestQuantize:
    def test_uniform_max_hand_example(self):
        out = quantize([1.0, -0.4, 2.0], QuantSpec(UniformMax(2.0)))
        assert np.array_equal(out.quantized, [1.0, 0.0, 2.0])
        assert np.allclose(out.error, [0.0, -0.4, 0.0])
        assert np.array_equal(out.scale, [1.0])

    def test_fixed_step_on_grid_exact(self):
        x = np.arange(-3, 4) * 1.0
        out = quantize(x, QuantSpec(FixedStep(1.0)))
        assert np.array_equal(out.error, np.zeros(7))

    def test_fixed_step_tie_to_even(self):
        out = quantize([0.5], QuantSpec(FixedStep(1.0)))
        assert np.array_equal(out.quantized, [0.0])

    def test_identity(self):
        x = np.array([0.123, -4.5])
        out = quantize(x, QuantSpec(Identity()))
        assert np.array_equal(out.quantized, x)
        assert np.array_equal(out.error, np.zeros(2))

    @staticmethod
    def _assert_reconstructs(out, x):
        # the error is computed after the quantized value, so the residual of
        # q + e vs x is at most an ulp of the larger of the two magnitudes
        gap = np.abs(out.quantized + out.error - x)
        scale = np.abs(x) + np.abs(out.quantized)
        assert np.all(gap <= 1e-15 * scale + 1e-300)

    def test_reconstruction_identity_all_grids(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 2, size=(8, 6))
        for grid in (UniformMax(7.0), FixedStep(0.3), IntSymmetric(4), Fp8E4M3(),
                     NoiseModel(0.2), Identity()):
            for rounding in (Rounding.RTN, Rounding.SR):
                out = quantize(x, QuantSpec(grid, rounding=rounding), RngKey(seed=1))
                self._assert_reconstructs(out, x)

    def test_rtn_half_step_bound(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0, 3, size=1000)
        for grid in (UniformMax(5.0), FixedStep(0.17)):
            out = quantize(x, QuantSpec(grid))
            assert np.max(np.abs(out.error)) <= out.scale[0] / 2 + 1e-15

    def test_fixed_step_idempotent(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=500)
        spec = QuantSpec(FixedStep(0.23))
        again = quantize(quantize(x, spec).quantized, spec)
        assert np.max(np.abs(again.error)) == 0.0

    def test_sr_unbiased_per_element(self):
        delta = 0.25
        probes = np.array([0.3, -1.7, 0.55])
        n = 200_000
        out = quantize(np.repeat(probes, n),
                       QuantSpec(FixedStep(delta), rounding=Rounding.SR), RngKey(seed=5))
        means = out.quantized.reshape(3, n).mean(axis=1)
        frac = probes / delta - np.floor(probes / delta)
        se = delta * np.sqrt(frac * (1 - frac) / n)
        assert np.all(np.abs(means - probes) <= 4 * se)

    def test_rowwise_permutation_equivariance_rtn(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 2, size=(6, 5))
        perm = rng.permutation(6)
        spec = QuantSpec(UniformMax(7.0), granularity=Granularity.ROW)
        direct = quantize(x[perm], spec)
        permuted = quantize(x, spec)
        assert np.array_equal(direct.quantized, permuted.quantized[perm])
        assert np.array_equal(direct.scale, permuted.scale[perm])

    def test_noise_model_variance(self):
        delta = 0.6
        out = quantize(np.zeros(1_000_000), QuantSpec(NoiseModel(delta)), RngKey(seed=11))
        assert np.var(out.error) == pytest.approx(delta**2 / 12, rel=0.02)

    def test_all_zero_group(self):
        out = quantize(np.zeros(4), QuantSpec(UniformMax(3.0)))
        assert np.array_equal(out.quantized, np.zeros(4))
        assert np.array_equal(out.error, np.zeros(4))
        assert np.array_equal(out.scale, [0.0])

    def test_same_key_same_draws(self):
        x = np.random.default_rng(4).normal(size=100)
        spec = QuantSpec(FixedStep(0.1), rounding=Rounding.SR)
        a = quantize(x, spec, RngKey(seed=8, step=3, tensor_id=1))
        b = quantize(x, spec, RngKey(seed=8, step=3, tensor_id=1))
        assert np.array_equal(a.quantized, b.quantized)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            quantize([np.nan], QuantSpec(FixedStep(1.0)))

    @settings(max_examples=50)
    @given(st.integers(0, 2**31), st.sampled_from(["uniform", "fixed", "int", "fp8"]))
    def test_reconstruction_property(self, seed, kind):
        rng = np.random.default_rng(seed)
        x = rng.normal(0, rng.uniform(0.1, 10), size=17)
        grid = {"uniform": UniformMax(4.0), "fixed": FixedStep(0.37),
                "int": IntSymmetric(5), "fp8": Fp8E4M3()}[kind]
        out = quantize(x, QuantSpec(grid, rounding=Rounding.SR), RngKey(seed=seed))
        self._assert_reconstructs(out, x)


class TestFp8:
    def test_table_shape(self):
        table = e4m3_magnitudes()
        assert table[0] == 0.0
        assert table[-1] == 448.0
        assert len(table) == 127
        assert np.all(np.diff(table) > 0)

    def test_one_exactly_representable(self):
        assert fp8_nearest(1.0) == 1.0

    def test_saturation(self):
        assert fp8_nearest(448.0) == 448.0
        assert fp8_nearest(500.0) == 448.0
        assert fp8_nearest(-500.0) == -448.0

    def test_zero(self):
        assert fp8_nearest(0.0) == 0.0

    def test_nearest_is_nearest(self):
        table = e4m3_magnitudes()
        rng = np.random.default_rng(6)
        xs = rng.uniform(0, 448, size=200)
        for x in xs:
            got = fp8_nearest(float(x))
            best = table[np.argmin(np.abs(table - x))]
            assert abs(got - x) <= abs(best - x) + 1e-18

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            fp8_nearest(float("nan"))

    def test_quantize_with_fp8_grid_scales_to_max(self):
        x = np.array([0.1, -0.5, 0.9])
        out = quantize(x, QuantSpec(Fp8E4M3()))
        assert out.scale[0] == pytest.approx(0.9 / FP8_MAX)
        # the max-magnitude element hits the top of the table exactly
        assert out.error[2] == pytest.approx(0.0, abs=1e-15)

    def test_sr_interpolates_between_neighbors(self):
        # magnitude between two representables rounds to one of the two
        table = e4m3_magnitudes()
        lo, hi = table[60], table[61]
        mid = 0.6 * lo + 0.4 * hi
        x = np.array([mid, 448.0])  # second element pins the scale to 1.0... of 448
        x = x / 1.0
        out = quantize(x, QuantSpec(Fp8E4M3(), rounding=Rounding.SR), RngKey(seed=3))
        assert out.quantized[0] in (pytest.approx(lo), pytest.approx(hi))


def test_grid_validation():
    with pytest.raises(ValueError):
        UniformMax(0.0)
    with pytest.raises(ValueError):
        FixedStep(-1.0)
    with pytest.raises(ValueError):
        IntSymmetric(1)
    with pytest.raises(ValueError):
        NoiseModel(0.0)
