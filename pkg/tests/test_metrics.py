import numpy as np
import pytest

from segtrack.bench import SyntheticSpec, gen_synthetic
from segtrack.core import BoundingBox, rect_to_mask
from segtrack.errors import ContractError, ParameterError, UsageError
from segtrack.metrics import (
    FrameScore,
    VotParams,
    VotRun,
    boundary_f,
    iou,
    measure_stats,
    run_vot,
    score_frames,
    vot_anchors,
    vot_evaluate,
)
from segtrack.pipeline import PipelineConfig
from segtrack.segmenters import OracleSegmenter
from segtrack.trackers import OracleTracker


def brute_iou(a, b):
    inter = union = 0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] and b[i, j]:
                inter += 1
            if a[i, j] or b[i, j]:
                union += 1
    return 1.0 if union == 0 else inter / union


class TestIou:
    def test_identical(self):
        m = rect_to_mask(BoundingBox(5, 5, 4, 4), 10, 10)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = rect_to_mask(BoundingBox(2, 2, 3, 3), 10, 10)
        b = rect_to_mask(BoundingBox(8, 8, 3, 3), 10, 10)
        assert iou(a, b) == 0.0

    def test_both_empty_is_one(self):
        z = np.zeros((5, 5), np.uint8)
        assert iou(z, z) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            a = (rng.random((16, 16)) < 0.4).astype(np.uint8)
            b = (rng.random((16, 16)) < 0.4).astype(np.uint8)
            assert iou(a, b) == brute_iou(a, b)
            assert iou(a, b) == iou(b, a)

    def test_dim_mismatch(self):
        with pytest.raises(ContractError):
            iou(np.zeros((4, 4), np.uint8), np.zeros((5, 5), np.uint8))


class TestBoundaryF:
    def test_identical_masks(self):
        m = rect_to_mask(BoundingBox(8, 8, 6, 6), 16, 16)
        assert boundary_f(m, m, 1.0) == 1.0

    def test_far_masks_zero(self):
        a = rect_to_mask(BoundingBox(3, 3, 3, 3), 30, 30)
        b = rect_to_mask(BoundingBox(25, 25, 3, 3), 30, 30)
        assert boundary_f(a, b, 2.0) == 0.0

    def test_one_pixel_shift(self):
        gt = rect_to_mask(BoundingBox(8, 8, 6, 6), 16, 16)
        pred = rect_to_mask(BoundingBox(9, 8, 6, 6), 16, 16)
        assert boundary_f(pred, gt, 1.0) == 1.0
        assert boundary_f(pred, gt, 0.0) < 1.0

    def test_monotone_in_theta(self):
        rng = np.random.default_rng(33)
        for _ in range(30):
            a = (rng.random((16, 16)) < 0.5).astype(np.uint8)
            b = (rng.random((16, 16)) < 0.5).astype(np.uint8)
            vals = [boundary_f(a, b, th) for th in (0.0, 1.0, 2.0, 5.0, 22.7)]
            assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
            assert vals[-1] == 1.0  # diagonal-sized tolerance accepts all

    def test_symmetry(self):
        rng = np.random.default_rng(34)
        a = (rng.random((12, 12)) < 0.5).astype(np.uint8)
        b = (rng.random((12, 12)) < 0.5).astype(np.uint8)
        assert boundary_f(a, b, 1.5) == pytest.approx(boundary_f(b, a, 1.5))

    def test_both_empty(self):
        z = np.zeros((8, 8), np.uint8)
        assert boundary_f(z, z, 1.0) == 1.0
        assert boundary_f(z, np.ones((8, 8), np.uint8), 1.0) == 0.0


class TestMeasureStats:
    def test_constant_scores_zero_decay(self):
        s = measure_stats([0.7] * 20)
        assert s.mean == pytest.approx(0.7)
        assert s.recall == 1.0
        assert s.decay == 0.0

    def test_forced_example(self):
        s = measure_stats([1, 1, 0, 0])
        assert s.mean == 0.5
        assert s.recall == 0.5
        assert s.decay == 1.0

    def test_linear_ramp_decay(self):
        scores = [1 - i / 39 for i in range(40)]
        s = measure_stats(scores)
        expected = sum(scores[:10]) / 10 - sum(scores[30:]) / 10
        assert s.decay == pytest.approx(expected)
        assert expected == pytest.approx(30 / 39)

    def test_recall_strict_at_half(self):
        s = measure_stats([0.5, 0.5, 0.5, 0.5000001])
        assert s.recall == 0.25

    def test_short_input_warns_zero_decay(self):
        with pytest.warns(UserWarning):
            s = measure_stats([1.0, 0.0, 1.0])
        assert s.decay == 0.0

    def test_empty_input(self):
        with pytest.raises(UsageError):
            measure_stats([])

    def test_permutation_sensitivity(self):
        rng = np.random.default_rng(35)
        vals = list(rng.random(16))
        shuffled = list(vals)
        rng.shuffle(shuffled)
        a, b = measure_stats(vals), measure_stats(shuffled)
        assert a.mean == pytest.approx(b.mean)
        assert a.recall == pytest.approx(b.recall)
        reversed_ = measure_stats(vals[::-1])
        assert reversed_.decay == pytest.approx(-a.decay)

    def test_remainder_goes_to_early_bins(self):
        # 6 frames -> bins of sizes 2,2,1,1
        s = measure_stats([1.0, 1.0, 0.5, 0.5, 0.5, 0.0])
        assert s.decay == pytest.approx(1.0 - 0.0)


class TestVotAnchors:
    def test_spec_fixture(self):
        assert vot_anchors(120, 50) == [
            (0, "forward"), (50, "forward"), (100, "backward"),
        ]

    def test_single_anchor(self):
        assert vot_anchors(50, 50) == [(0, "forward")]

    def test_midpoint_tie_forward(self):
        # anchor 50 in a 101-frame sequence: both directions give 51 frames
        assert (50, "forward") in vot_anchors(101, 50)

    def test_all_anchors_in_range(self):
        for n in (1, 49, 120, 755):
            anchors = vot_anchors(n, 50)
            assert all(0 <= a < n for a, _ in anchors)
            diffs = [b[0] - a[0] for a, b in zip(anchors, anchors[1:])]
            assert all(d == 50 for d in diffs)


class TestVotEvaluate:
    def test_perfect_tracker(self):
        runs = [
            VotRun(anchor=0, direction="forward", overlaps=[1.0] * 10, subseq_len=10),
            VotRun(anchor=5, direction="backward", overlaps=[1.0] * 6, subseq_len=6),
        ]
        sc = vot_evaluate(runs, VotParams(fail_tau=0.1, burn_in=1, eao_lo=2, eao_hi=4))
        assert sc.accuracy == 1.0
        assert sc.robustness == 1.0
        assert sc.eao == 1.0

    def test_failure_halves_robustness(self):
        runs = [
            VotRun(
                anchor=0, direction="forward",
                overlaps=[0.8] * 10 + [0.05], subseq_len=20,
            )
        ]
        sc = vot_evaluate(runs, VotParams(fail_tau=0.1, burn_in=0, eao_lo=2, eao_hi=4))
        assert sc.robustness == 0.5

    def test_hand_computed_fixture(self):
        runs = [
            VotRun(anchor=0, direction="forward",
                   overlaps=[1.0, 0.8, 0.6, 0.4, 0.3], subseq_len=5),
            VotRun(anchor=50, direction="backward",
                   overlaps=[0.9, 0.7, 0.05], subseq_len=6),
        ]
        sc = vot_evaluate(runs, VotParams(fail_tau=0.1, burn_in=1, eao_lo=2, eao_hi=4))
        assert sc.accuracy == pytest.approx(2.8 / 5, abs=1e-9)
        assert sc.robustness == pytest.approx(7 / 11, abs=1e-9)
        phi2 = ((1.0 + 0.8) / 2 + (0.9 + 0.7) / 2) / 2
        phi3 = ((1.0 + 0.8 + 0.6) / 3 + (0.9 + 0.7 + 0.0) / 3) / 2
        phi4 = ((1.0 + 0.8 + 0.6 + 0.4) / 4 + (0.9 + 0.7 + 0.0 + 0.0) / 4) / 2
        assert sc.eao == pytest.approx((phi2 + phi3 + phi4) / 3, abs=1e-9)

    def test_burn_in_excluded_with_sentinels(self):
        params = VotParams(fail_tau=0.1, burn_in=2, eao_lo=2, eao_hi=2)
        tail = [0.5, 0.7, 0.9, 0.6]
        for sentinel in (0.123, 0.987):
            runs = [VotRun(anchor=0, direction="forward",
                           overlaps=[sentinel, sentinel] + tail, subseq_len=6)]
            sc = vot_evaluate(runs, params)
            assert sc.accuracy == pytest.approx(sum(tail) / 4, abs=1e-12)

    def test_short_unfailed_run_excluded_from_phi(self):
        runs = [
            VotRun(anchor=0, direction="forward", overlaps=[0.4, 0.4], subseq_len=2),
            VotRun(anchor=0, direction="forward", overlaps=[0.8] * 5, subseq_len=5),
        ]
        sc = vot_evaluate(runs, VotParams(fail_tau=0.1, burn_in=0, eao_lo=4, eao_hi=4))
        assert sc.eao == pytest.approx(0.8)

    def test_empty_runs(self):
        with pytest.raises(UsageError):
            vot_evaluate([], VotParams())


class TestRunVot:
    def test_oracle_pair_perfect(self):
        seq = gen_synthetic(SyntheticSpec(n_frames=30, seed=41))
        runs = run_vot(
            lambda s, o: OracleTracker(s.gt_boxes(o)),
            lambda s, o: OracleSegmenter(s.gt_masks[o]),
            seq, 1, PipelineConfig(k=1.0),
            VotParams(interval=10, eao_lo=2, eao_hi=5),
        )
        assert len(runs) == 3
        directions = [r.direction for r in runs]
        assert directions == ["forward", "forward", "backward"]
        sc = vot_evaluate(runs, VotParams(interval=10, burn_in=1, eao_lo=2, eao_hi=5))
        assert sc.accuracy == 1.0
        assert sc.robustness == 1.0


class TestScoreFrames:
    def test_empty_gt_marked_invalid(self):
        m = rect_to_mask(BoundingBox(5, 5, 4, 4), 10, 10)
        z = np.zeros((10, 10), np.uint8)
        scores = score_frames([m, m], [m, z], theta=1.0)
        assert scores[0].valid and scores[0].j == 1.0
        assert not scores[1].valid
        assert scores == [
            FrameScore(j=1.0, f=1.0, valid=True),
            FrameScore(j=0.0, f=0.0, valid=False),
        ]
