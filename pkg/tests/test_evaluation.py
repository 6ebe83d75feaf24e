import json

import numpy as np
import pytest

from skeldiff.autoencoder import Autoencoder
from skeldiff.config import RunConfig
from skeldiff.data_io import gen_dataset
from skeldiff.diffusion import Denoiser, make_schedule
from skeldiff.errors import MaskError, ShapeError
from skeldiff.evaluation import (EvalReport, aggregate_rows, dtw, evaluate,
                                 frame_cost_matrix, mpjpe_masked, win_score)
from skeldiff.graph import default_skeleton
from skeldiff.masking import MaskSpec, interval_mask
from skeldiff.rng import Rng

from oracles import mpjpe_oracle


class TestDtw:
    def test_identical_sequences_cost_zero(self, nprng):
        x = nprng.standard_normal((3, 9, 4))
        assert dtw(x, x) == 0.0

    def test_hand_dp_table(self):
        a = np.array([0.0, 1.0, 2.0]).reshape(1, 3, 1)
        b = np.array([0.0, 2.0]).reshape(1, 2, 1)
        # accumulated cost 1 over lengths 3 + 2
        assert np.isclose(dtw(a, b), 0.2)

    def test_symmetry(self, nprng):
        for _ in range(5):
            a = nprng.standard_normal((2, 7, 3))
            b = nprng.standard_normal((2, 5, 3))
            assert np.isclose(dtw(a, b), dtw(b, a), rtol=1e-12)

    def test_warping_never_hurts(self, nprng):
        for _ in range(5):
            a = nprng.standard_normal((2, 6, 3))
            b = nprng.standard_normal((2, 6, 3))
            identity_cost = float(
                np.trace(frame_cost_matrix(a, b)) / (a.shape[1] + b.shape[1]))
            assert dtw(a, b) <= identity_cost + 1e-12

    def test_empty_sequence_rejected(self, nprng):
        x = nprng.standard_normal((3, 5, 2))
        with pytest.raises(ShapeError):
            dtw(x, np.zeros((3, 0, 2)))

    def test_cost_matrix_is_mean_joint_distance(self, nprng):
        a = nprng.standard_normal((3, 4, 5))
        b = nprng.standard_normal((3, 6, 5))
        cost = frame_cost_matrix(a, b)
        i, j = 2, 3
        want = np.mean([np.linalg.norm(a[:, i, v] - b[:, j, v])
                        for v in range(5)])
        assert np.isclose(cost[i, j], want, rtol=1e-12)


class TestMpjpe:
    def test_zero_for_identical(self, nprng):
        x = nprng.standard_normal((3, 10, 4))
        assert mpjpe_masked(x, x, MaskSpec(10, (3, 4))) == 0.0

    def test_uniform_offset_gives_its_norm(self, nprng):
        gt = nprng.standard_normal((3, 10, 4))
        delta = np.array([1.0, 2.0, 2.0])  # norm 3
        gen = gt + delta[:, None, None]
        assert np.isclose(mpjpe_masked(gen, gt, MaskSpec(10, (2, 5))), 3.0)

    def test_matches_loop_oracle(self, nprng):
        gen = nprng.standard_normal((3, 12, 5))
        gt = nprng.standard_normal((3, 12, 5))
        mask = MaskSpec(12, (2, 3, 7))
        want = mpjpe_oracle(gen, gt, [2, 3, 7])
        assert np.isclose(mpjpe_masked(gen, gt, mask), want, rtol=1e-12)

    def test_ignores_observed_frames(self, nprng):
        gt = nprng.standard_normal((3, 10, 4))
        gen = gt.copy()
        gen[:, 0, :] += 100.0  # observed frame 0 corrupted
        assert mpjpe_masked(gen, gt, MaskSpec(10, (4, 5))) == 0.0

    def test_empty_mask_rejected(self, nprng):
        x = nprng.standard_normal((3, 10, 4))
        with pytest.raises(MaskError):
            mpjpe_masked(x, x, MaskSpec(10, ()))


class TestAggregation:
    def test_tie_counts_half(self):
        assert win_score(1.0, 1.0) == 0.5
        assert win_score(0.5, 1.0) == 1.0
        assert win_score(2.0, 1.0) == 0.0

    def test_baseline_vs_baseline_win_rate(self):
        rows = [{"dtw_model": 0.3, "dtw_baseline": 0.3,
                 "mpjpe_model": 0.1, "mpjpe_baseline": 0.1,
                 "win": win_score(0.3, 0.3)} for _ in range(4)]
        assert aggregate_rows(rows)["dtw_win_rate"] == 0.5


class TestEvaluate:
    @pytest.fixture(scope="class")
    def setup(self):
        skel = default_skeleton()
        cfg = RunConfig()
        ae = Autoencoder(skel, cfg, Rng(70))
        dn = Denoiser(skel, cfg, Rng(71))
        testset = gen_dataset(3, 30, skel, Rng(72))
        return skel, cfg, ae, dn, testset

    def test_report_structure_and_reproducibility(self, setup):
        _, cfg, ae, dn, testset = setup
        sched = make_schedule(cfg.diffusion_steps)

        def make_mask(t):
            return interval_mask(t, every=15, remove=8)

        rep1 = evaluate(testset, ae, dn, sched, cfg, make_mask, seed=3,
                        protocol={"mode": "interval"})
        rep2 = evaluate(testset, ae, dn, sched, cfg, make_mask, seed=3,
                        protocol={"mode": "interval"})
        assert rep1.to_json() == rep2.to_json()
        assert len(rep1.per_sequence) == 3
        assert set(rep1.aggregates) == {
            "dtw_model_mean", "dtw_baseline_mean", "mpjpe_model_mean",
            "mpjpe_baseline_mean", "dtw_win_rate"}
        doc = json.loads(rep1.to_json())
        assert doc["protocol"] == {"mode": "interval"}
        assert doc["config"]["seed"] == cfg.seed

    def test_observed_exact_flag(self, setup):
        _, cfg, ae, dn, testset = setup
        sched = make_schedule(cfg.diffusion_steps)
        rep = evaluate(testset, ae, dn, sched, cfg,
                       lambda t: interval_mask(t, 15, 8), seed=4)
        assert all(r["observed_exact"] for r in rep.per_sequence)

    def test_table_renders(self, setup):
        _, cfg, ae, dn, testset = setup
        sched = make_schedule(cfg.diffusion_steps)
        rep = evaluate(testset, ae, dn, sched, cfg,
                       lambda t: interval_mask(t, 15, 8), seed=5)
        table = rep.to_table()
        assert "dtw_model" in table.splitlines()[0]
        assert len(table.splitlines()) == 3 + len(rep.per_sequence) + 1
