import numpy as np
import pytest

from skeldiff.errors import MaskError
from skeldiff.masking import (MaskSpec, fill, interp_fill, interval_mask,
                              random_mask, zero_fill)
from skeldiff.rng import Rng


class TestMaskSpec:
    def test_endpoints_cannot_be_masked(self):
        with pytest.raises(MaskError):
            MaskSpec(10, (0,))
        with pytest.raises(MaskError):
            MaskSpec(10, (9,))

    def test_observed_is_complement(self):
        m = MaskSpec(6, (2, 3))
        assert m.observed == (0, 1, 4, 5)

    def test_runs_are_contiguous_blocks(self):
        m = MaskSpec(12, (2, 3, 4, 7, 9, 10))
        assert m.runs() == [(2, 4), (7, 7), (9, 10)]

    def test_indices_must_increase(self):
        with pytest.raises(MaskError):
            MaskSpec(10, (3, 3))


class TestRandomMask:
    def test_masked_count_matches_formula(self):
        for t in (4, 10, 23, 62, 200):
            m = random_mask(t, 0.5, Rng(1))
            assert len(m.masked) == int(np.ceil(0.5 * (t - 2)))

    def test_t62_half_is_30(self):
        assert len(random_mask(62, 0.5, Rng(3)).masked) == 30

    def test_small_ratio_masks_at_least_one_frame(self):
        m = random_mask(10, 0.01, Rng(2))
        assert len(m.masked) == 1
        assert 0 not in m.masked and 9 not in m.masked

    def test_same_seed_same_mask(self):
        assert random_mask(60, 0.5, Rng(9)).masked \
            == random_mask(60, 0.5, Rng(9)).masked

    def test_invalid_arguments(self):
        with pytest.raises(MaskError):
            random_mask(3, 0.5, Rng(0))
        with pytest.raises(MaskError):
            random_mask(10, 0.0, Rng(0))
        with pytest.raises(MaskError):
            random_mask(10, 1.0, Rng(0))

    def test_spans_are_contiguous_chunks(self):
        # with a tiny ratio the single clipped span must be one run
        m = random_mask(100, 0.06, Rng(5))
        assert len(m.runs()) == 1


class TestIntervalMask:
    def test_remove20_every30_t60(self):
        m = interval_mask(60, every=30, remove=20)
        want = tuple(range(10, 30)) + tuple(range(40, 59))
        assert m.masked == want
        assert len(m.masked) == 39

    def test_remove10_every30_t30(self):
        m = interval_mask(30, every=30, remove=10)
        assert m.masked == tuple(range(20, 29))

    def test_final_partial_block_rule(self):
        # T=45: block 2 is frames 30..44; within-block index >= 10 -> 40..44
        m = interval_mask(45, every=30, remove=20)
        want = tuple(range(10, 30)) + tuple(range(40, 44))
        assert m.masked == want

    def test_degenerate_empty_mask_rejected(self):
        with pytest.raises(MaskError):
            interval_mask(30, every=30, remove=1)  # only frame 29 == T-1

    def test_invalid_parameters(self):
        with pytest.raises(MaskError):
            interval_mask(30, every=30, remove=0)
        with pytest.raises(MaskError):
            interval_mask(30, every=30, remove=30)
        with pytest.raises(MaskError):
            interval_mask(20, every=30, remove=10)


class TestInterpFill:
    def test_scalar_gap_linear_values(self):
        x = np.zeros((1, 6, 1))
        x[0, 5, 0] = 1.0
        m = MaskSpec(6, (1, 2, 3, 4))
        out = interp_fill(x, m)
        assert np.allclose(out[0, :, 0], [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])

    def test_constant_sequence_unchanged(self):
        x = np.full((3, 8, 2), 1.7)
        out = interp_fill(x, MaskSpec(8, (2, 3, 5)))
        assert np.array_equal(out, x)

    def test_equal_anchors_fill_with_anchor(self):
        x = np.zeros((1, 5, 1))
        x[0, [0, 4], 0] = 3.0
        x[0, 1:4, 0] = 99.0  # masked garbage must be ignored
        out = interp_fill(x, MaskSpec(5, (1, 2, 3)))
        assert np.allclose(out[0, :, 0], 3.0)

    def test_observed_frames_untouched(self, nprng):
        x = nprng.standard_normal((3, 20, 5))
        m = MaskSpec(20, (4, 5, 6, 12, 13))
        out = interp_fill(x, m)
        obs = list(m.observed)
        assert np.array_equal(out[:, obs, :], x[:, obs, :])

    def test_affine_motion_reproduced_exactly(self):
        t = np.arange(30.0)
        x = np.stack([2.0 * t + 1.0, -t, 0.5 * t]).reshape(3, 30, 1)
        x = np.repeat(x, 4, axis=2)
        m = MaskSpec(30, tuple(range(5, 25)))
        out = interp_fill(x, m)
        assert np.allclose(out, x, rtol=1e-12, atol=1e-12)

    def test_zero_fill_mode(self, nprng):
        x = nprng.standard_normal((3, 10, 2))
        m = MaskSpec(10, (3, 4))
        out = fill(x, m, "zero")
        assert np.array_equal(out, zero_fill(x, m))
        assert np.array_equal(out[:, [3, 4], :], np.zeros((3, 2, 2)))

    def test_unknown_fill_mode(self, nprng):
        with pytest.raises(MaskError):
            fill(nprng.standard_normal((3, 10, 2)), MaskSpec(10, (3,)), "nope")
