"""Filter-bank tests: decomposition, quantization, pooling, pyramid."""

import numpy as np
import pytest

from pulsegabor.filters import (
    STAGE_NAMES,
    EdgeDetectorBank,
    GaborPyramid,
    IntegerMask,
    MaskDecomposition,
    PyramidConfig,
    abs_pool,
    abs_pool_grid,
    build_edge_detector,
    build_gabor_pyramid,
    decompose_mask,
    default_gabor_mask,
    pow2_capacity,
    quantize_kernel,
    static_mask_response,
    static_response_map,
)
from pulsegabor.images import bars_and_disk
from pulsegabor.kernel import regular_train
from pulsegabor.oracle import convolve2d

from conftest import random_zero_sum_mask


class TestPow2Capacity:
    def test_values(self):
        assert [pow2_capacity(n) for n in (1, 2, 3, 5, 8, 9, 16)] == [1, 2, 4, 8, 8, 16, 16]

    def test_validation(self):
        with pytest.raises(ValueError):
            pow2_capacity(0)


class TestIntegerMask:
    def test_one_dimensional_input_becomes_a_row(self):
        m = IntegerMask([1, -2, 1])
        assert m.shape == (1, 3)
        assert m.anchor == (0, 1)  # grid center

    def test_coefficient_sum_and_negation(self):
        m = IntegerMask([[1, -2], [0, 1]])
        assert m.coefficient_sum == 0
        n = m.negated()
        assert np.array_equal(n.coefficients, -m.coefficients)
        assert n.anchor == m.anchor

    def test_anchor_validation(self):
        IntegerMask([[1, -1]], anchor=(0, 1))
        with pytest.raises(ValueError):
            IntegerMask([[1, -1]], anchor=(1, 0))
        with pytest.raises(ValueError):
            IntegerMask([[1, -1]], anchor=(0, -1))

    def test_coefficients_read_only(self):
        m = IntegerMask([1, -1])
        with pytest.raises(ValueError):
            m.coefficients[0, 0] = 5

    def test_json_round_trip(self, tmp_path):
        m = IntegerMask([[2, -1], [-2, 1]], anchor=(1, 1))
        path = tmp_path / "mask.json"
        text = m.to_json(path)
        back = IntegerMask.from_json(path.read_text(encoding="ascii"))
        assert np.array_equal(back.coefficients, m.coefficients)
        assert back.anchor == m.anchor
        assert IntegerMask.from_json(text).to_json() == text


class TestDecomposeMask:
    def test_second_difference_mask(self):
        d = decompose_mask(IntegerMask([1, -2, 1]))
        assert d.pairs == (((0, 0), (0, 1)), ((0, 2), (0, 1)))
        assert d.polarity == 1

    def test_five_tap_mask(self):
        d = decompose_mask(IntegerMask([1, -2, 2, -2, 1]))
        assert d.pairs == (
            ((0, 0), (0, 1)),
            ((0, 2), (0, 1)),
            ((0, 2), (0, 3)),
            ((0, 4), (0, 3)),
        )

    def test_nonzero_sum_rejected(self):
        with pytest.raises(ValueError, match="not zero-sum"):
            decompose_mask(IntegerMask([1, -2, 2]))

    def test_swapped_negates(self):
        d = decompose_mask(IntegerMask([1, -2, 1]))
        s = d.swapped()
        assert s.polarity == -1
        assert s.pairs[0] == ((0, 1), (0, 0))
        assert np.array_equal(s.reconstruct().coefficients, [[-1, 2, -1]])

    def test_reconstruct_round_trip_corpus(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            mask = random_zero_sum_mask(rng)
            d = decompose_mask(mask)
            assert len(d) == int(np.maximum(mask.coefficients, 0).sum())
            back = d.reconstruct()
            assert np.array_equal(back.coefficients, mask.coefficients)
            assert back.anchor == mask.anchor

    def test_determinism(self):
        rng = np.random.default_rng(5)
        mask = random_zero_sum_mask(rng)
        assert decompose_mask(mask).pairs == decompose_mask(mask).pairs


class TestStaticResponse:
    def test_hand_examples(self):
        d = decompose_mask(IntegerMask([1, -2, 1]))
        # (3,2,1): the left pair passes one unit, the right pair is blocked
        assert static_mask_response(d, [3, 2, 1]) == 1.0
        assert static_mask_response(d.swapped(), [3, 2, 1]) == 1.0
        # (2,2,1): flat left, falling right
        assert static_mask_response(d, [2, 2, 1]) == 0.0
        assert static_mask_response(d.swapped(), [2, 2, 1]) == 1.0

    def test_two_sided_difference_equals_signed_convolution(self):
        # sum over pairs of max(p-m,0) - max(m-p,0) telescopes to the
        # plain coefficient-weighted sum, whatever the pairing
        rng = np.random.default_rng(77)
        for _ in range(40):
            mask = random_zero_sum_mask(rng, max_side=6)
            d = decompose_mask(mask)
            pattern = rng.integers(0, 30, size=mask.shape)
            pos = static_mask_response(d, pattern)
            neg = static_mask_response(d.swapped(), pattern)
            assert pos - neg == float((mask.coefficients * pattern).sum())

    def test_response_map_matches_convolution_identity(self):
        rng = np.random.default_rng(78)
        mask = random_zero_sum_mask(rng, max_side=4)
        d = decompose_mask(mask)
        rates = rng.integers(0, 50, size=(11, 12)).astype(np.float64)
        pos = static_response_map(d, rates)
        neg = static_response_map(d.swapped(), rates)
        ref = convolve2d(rates, mask.coefficients.astype(np.float64))
        assert pos.shape == ref.shape
        assert np.array_equal(pos - neg, ref)

    def test_response_map_brute_agreement(self):
        d = decompose_mask(IntegerMask([[1, -1], [-1, 1]]))
        rates = np.arange(20.0).reshape(4, 5)
        out = static_response_map(d, rates)
        for r in range(out.shape[0]):
            for c in range(out.shape[1]):
                assert out[r, c] == static_mask_response(d, rates[r : r + 2, c : c + 2])


class TestQuantizeKernel:
    def test_integer_kernel_is_fixed_point(self):
        m = quantize_kernel(np.array([[1.0, -2.0, 1.0]]), max_coeff=2, positive_budget=8)
        assert np.array_equal(m.coefficients, [[1, -2, 1]])

    def test_output_contract(self):
        rng = np.random.default_rng(9)
        k = rng.normal(size=(5, 5))
        k -= k.mean()
        m = quantize_kernel(k, max_coeff=3, positive_budget=8)
        assert m.coefficient_sum == 0
        assert np.abs(m.coefficients).max() <= 3
        assert np.maximum(m.coefficients, 0).sum() <= 8

    def test_zero_kernel_rejected(self):
        with pytest.raises(ValueError, match="identically zero"):
            quantize_kernel(np.zeros((3, 3)))

    def test_too_tight_budget_rejected(self):
        # shrinking this kernel under a 4-unit positive budget rounds the
        # negative lobes away entirely, leaving nothing after repair
        from pulsegabor.oracle import gabor_kernel

        k = gabor_kernel(wavelength=6.0, orientation=0.0, sigma=2.2, aspect=0.9, size=7)
        with pytest.raises(ValueError, match="quantized to nothing"):
            quantize_kernel(k, max_coeff=2, positive_budget=4)

    def test_default_mask_structure(self):
        m = default_gabor_mask()
        assert m.shape == (7, 7)
        assert m.coefficient_sum == 0
        expect = np.zeros((7, 7), dtype=np.int64)
        expect[1:6, 3] = 1
        expect[2:5, 0] = -1
        expect[2:4, 6] = -1
        assert np.array_equal(m.coefficients, expect)
        d = decompose_mask(m)
        assert len(d) == 5
        assert pow2_capacity(len(d)) == 8


class TestAbsPool:
    def test_rate_difference_both_directions(self):
        dt, duration = 0.0025, 120.0
        n_ticks = int(round(duration / dt))
        hi = regular_train(50.0, n_ticks, dt)
        lo = regular_train(20.0, n_ticks, dt, phase=0.5)
        out = abs_pool(hi, lo)
        assert out.rate(60.0, 120.0) == pytest.approx(30.0, abs=6.0)
        # swapping the inputs swaps lane roles only; the merged train
        # is identical tick for tick
        swapped = abs_pool(lo, hi)
        assert np.array_equal(out.ticks, swapped.ticks)

    def test_clock_mismatch_rejected(self):
        a = regular_train(10.0, 100, 0.01)
        b = regular_train(10.0, 100, 0.02)
        with pytest.raises(ValueError):
            abs_pool(a, b)

    def test_grid_diagonal_is_silent(self):
        rates = abs_pool_grid([0.0, 30.0, 60.0], [0.0, 30.0, 60.0])
        assert np.all(rates == 0.0)

    def test_grid_off_diagonal(self):
        rates = abs_pool_grid([0.0, 30.0, 60.0], 30.0)
        assert rates.shape == (3,)
        assert rates[0] == pytest.approx(30.0, abs=6.0)
        assert rates[1] == 0.0
        assert rates[2] == pytest.approx(30.0, abs=6.0)


class TestEdgeDetector:
    def test_build_and_validation(self):
        det = build_edge_detector(10)
        assert det.n_pairs == 9
        assert det.capacity == 16
        assert not det.pooled
        with pytest.raises(ValueError):
            build_edge_detector(1)

    def test_uniform_input_silent(self):
        det = build_edge_detector(4)
        resp = det.run(np.full(4, 40.0), duration=8.0)
        assert resp.unpooled == 0.0
        assert resp.negative == 0.0
        assert resp.pooled is None

    def test_pooled_uniform_silent(self):
        det = build_edge_detector(4, pooled=True)
        resp = det.run(np.full(4, 40.0), duration=8.0)
        assert resp.pooled == 0.0

    def test_mirrored_stimulus_swaps_polarity(self):
        det = build_edge_detector(4)
        rates = np.array([80.0, 80.0, 0.0, 0.0])
        fwd = det.run(rates, duration=8.0)
        rev = det.run(rates[::-1], duration=8.0)
        assert fwd.positive > 0.0
        assert fwd.positive == rev.negative
        assert fwd.negative == rev.positive

    def test_rate_vector_length_checked(self):
        det = build_edge_detector(4)
        with pytest.raises(ValueError):
            det.run(np.zeros(3), duration=1.0)


class TestPyramidConfig:
    def test_defaults(self):
        cfg = PyramidConfig()
        assert cfg.dt == 0.001
        assert cfg.weight_init == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            PyramidConfig(dt=0.0)
        with pytest.raises(ValueError):
            PyramidConfig(duration=0.0)
        with pytest.raises(ValueError):
            PyramidConfig(rate_ceiling=2000.0, dt=0.001)  # over one per tick
        with pytest.raises(ValueError):
            PyramidConfig(snapshot_pulses=(0,))


class TestGaborPyramid:
    def _tiny(self, image=None, **overrides):
        mask = IntegerMask([1, -2, 1])
        if image is None:
            image = np.full((6, 6), 128, dtype=np.uint8)
        cfg = PyramidConfig(duration=2.0, sigma=0.0, **overrides)
        return build_gabor_pyramid(mask, image, cfg)

    def test_validation(self):
        with pytest.raises(ValueError, match="not zero-sum"):
            build_gabor_pyramid(IntegerMask([1, 1]), np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            build_gabor_pyramid(
                IntegerMask([1, -1]), np.zeros((1, 1), dtype=np.uint8)
            )  # mask wider than image

    def test_uniform_image_yields_exact_silence(self):
        pyr = self._tiny()
        result = pyr.run()
        assert result.out_shape == (6, 4)
        for stage in ("sub_pos", "sub_neg", "abs"):
            assert np.all(result.histograms[stage].counts == 0)
        # the pixel stage itself is busy
        assert result.histograms["pixels"].counts.sum() > 0

    def test_stage_census_and_grids(self):
        result = self._tiny().run()
        assert set(result.histograms) == set(STAGE_NAMES)
        assert result.grid("pixels").shape == (6, 6)
        assert result.grid("abs").shape == (6, 4)
        with pytest.raises(KeyError):
            result.grid("nonexistent")

    def test_determinism(self):
        a = self._tiny().run()
        b = self._tiny().run()
        for stage in STAGE_NAMES:
            assert np.array_equal(
                a.histograms[stage].counts, b.histograms[stage].counts
            )

    def test_brightest_address_prefers_original_image(self):
        img = bars_and_disk(16)
        pyr = build_gabor_pyramid(
            IntegerMask([1, -2, 1]), img, PyramidConfig(duration=0.5)
        )
        # first 255 pixel in row-major order: row 2, column 2
        assert pyr.brightest_address == 2 * 16 + 2

    def test_snapshots_accumulate(self):
        img = bars_and_disk(16)
        cfg = PyramidConfig(duration=2.0, snapshot_pulses=(1, 3))
        result = build_gabor_pyramid(IntegerMask([1, -2, 1]), img, cfg).run()
        assert set(result.snapshots) == {1, 3}
        assert result.brightest_pulses >= 3
        early, late = result.snapshots[1], result.snapshots[3]
        assert np.all(early <= late)
        assert np.all(late <= result.histograms["abs"].counts)
        assert result.snapshot_grid(3).shape == result.out_shape

    def test_routing_table_smoke(self):
        pyr = self._tiny()
        table = pyr.to_routing_table()
        assert len(table) > 0
        # corner pixel feeds one positive-bank pair and one negative-bank pair
        assert table.fan_out(0) == 2
        assert table.to_json() == pyr.to_routing_table().to_json()
