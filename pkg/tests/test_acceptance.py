"""End-to-end acceptance gate.

One test per shipped guarantee; each prints a single PASS/FAIL line so the
suite output doubles as a checklist.  Tolerances and time budgets are pinned
here on purpose, do not loosen them to make a regression green.
"""

import functools
import json
import time

import numpy as np
import pytest

from segtrack.bench import (
    SyntheticSpec,
    decompose_error,
    gen_synthetic,
    load_config,
    rle_decode,
    rle_encode,
    run_benchmark,
)
from segtrack.core import rect_to_mask
from segtrack.errors import DataError
from segtrack.metrics import (
    VotParams,
    VotRun,
    boundary_f,
    iou,
    measure_stats,
    run_vot,
    score_frames,
    valid_scores,
    vot_anchors,
    vot_evaluate,
)
from segtrack.pipeline import PipelineConfig, run_sequence
from segtrack.segmenters import OracleSegmenter, RectFillSegmenter
from segtrack.trackers import (
    KcfTracker,
    NccTracker,
    OracleTracker,
    kernel_correlation,
)


def checklist(name, budget_s=None):
    """Print '<name>: PASS|FAIL' after the wrapped test body runs."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"{name}: FAIL")
                raise
            elapsed = time.perf_counter() - t0
            if budget_s is not None and elapsed >= budget_s:
                print(f"{name}: FAIL (took {elapsed:.3f}s, budget {budget_s}s)")
                pytest.fail(f"{name} exceeded time budget: {elapsed:.3f}s")
            print(f"{name}: PASS")

        return wrapper

    return deco


@checklist("error decomposition worked examples", budget_s=None)
def test_error_decomposition_worked_examples():
    t0 = time.perf_counter()
    d1 = decompose_error(0.519, 0.440, 0.809, 0.638)
    d2 = decompose_error(0.519, 0.464, 0.744, 0.691)
    elapsed = time.perf_counter() - t0
    assert abs(d1.e_tracker - 0.079) <= 1e-9
    assert abs(d1.e_segmenter - 0.092) <= 1e-9
    assert abs(d2.e_tracker - 0.055) <= 1e-9
    assert abs(d2.e_segmenter - (-0.002)) <= 1e-9
    assert elapsed < 1e-3


def ceiling_sequences():
    return [
        gen_synthetic(SyntheticSpec(name=f"ceil{i}", shape=shape, n_frames=60,
                                    size=(160, 120), start=(40 + 10 * i, 60),
                                    velocity=(1, 0), shape_size=(20, 14),
                                    seed=100 + i))
        for i, shape in enumerate(["rect", "ellipse", "rect"])
    ]


@checklist("oracle tracker + oracle segmenter ceiling", budget_s=10.0)
def test_oracle_ceiling():
    for seq in ceiling_sequences():
        assert len(seq) >= 60
        rec = run_sequence(
            OracleTracker(seq.gt_boxes(1)), OracleSegmenter(seq.gt_masks[1]),
            seq, 1, PipelineConfig(k=1.0),
        )
        scores = score_frames(
            [fr.mask for fr in rec.frames], seq.gt_masks[1][1:]
        )
        j = measure_stats(valid_scores(scores, "j"))
        f = measure_stats(valid_scores(scores, "f"))
        assert j.mean == 1.0
        assert f.mean == 1.0

        runs = run_vot(
            lambda s, o: OracleTracker(s.gt_boxes(o)),
            lambda s, o: OracleSegmenter(s.gt_masks[o]),
            seq, 1, PipelineConfig(k=1.0), VotParams(interval=50),
        )
        sc = vot_evaluate(runs, VotParams(interval=50, eao_lo=2, eao_hi=4))
        assert sc.accuracy == 1.0
        assert sc.robustness == 1.0


@checklist("rectangle-fill baseline equals rasterized tracker box")
def test_rectfill_equals_rect_to_mask():
    seq = gen_synthetic(
        SyntheticSpec(shape="rect", size=(200, 100), n_frames=40, start=(30, 50),
                      velocity=(2, 0), shape_size=(20, 20), seed=201)
    )
    for tracker in (NccTracker(), KcfTracker()):
        shadow = type(tracker)()
        shadow.init(seq.frames[0], seq.gt_boxes(1)[0])
        rec = run_sequence(tracker, RectFillSegmenter(), seq, 1, PipelineConfig(k=1.5))
        for t, fr in enumerate(rec.frames, start=1):
            b = shadow.update(seq.frames[t])
            assert b == fr.bbox
            np.testing.assert_array_equal(
                fr.mask, rect_to_mask(b, seq.width, seq.height)
            )


@checklist("ellipse under box baseline scores pi/4")
def test_ellipse_rect_baseline_pi_over_four():
    seq = gen_synthetic(
        SyntheticSpec(shape="ellipse", size=(300, 200), n_frames=40,
                      start=(80, 100), velocity=(2, 0), shape_size=(120, 90),
                      seed=202)
    )
    rec = run_sequence(
        OracleTracker(seq.gt_boxes(1)), RectFillSegmenter(), seq, 1,
        PipelineConfig(k=1.5),
    )
    js = [iou(fr.mask, seq.gt_masks[1][t]) for t, fr in enumerate(rec.frames, 1)]
    assert measure_stats(js).mean == pytest.approx(np.pi / 4, abs=0.03)


@checklist("region-similarity and boundary metric oracles", budget_s=30.0)
def test_metric_oracles():
    rng = np.random.default_rng(300)
    for _ in range(1000):
        a = (rng.random((16, 16)) < rng.uniform(0.1, 0.9)).astype(np.uint8)
        b = (rng.random((16, 16)) < rng.uniform(0.1, 0.9)).astype(np.uint8)
        inter = int(np.logical_and(a, b).sum())
        union = int(np.logical_or(a, b).sum())
        expect = 1.0 if union == 0 else inter / union
        assert iou(a, b) == expect

    m = rect_to_mask_square = np.zeros((32, 32), np.uint8)
    rect_to_mask_square[10:20, 10:20] = 1
    far = np.zeros((32, 32), np.uint8)
    far[1:4, 1:4] = 1
    assert boundary_f(m, m, 2.0) == 1.0
    assert boundary_f(m, far, 1.0) == 0.0
    for _ in range(100):
        a = (rng.random((24, 24)) < 0.5).astype(np.uint8)
        b = (rng.random((24, 24)) < 0.5).astype(np.uint8)
        vals = [boundary_f(a, b, th) for th in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)]
        assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))

    for v in (0.0, 0.2, 0.5, 0.9, 1.0):
        assert measure_stats([v] * 25).decay == 0.0
    assert measure_stats([0.5] * 8).recall == 0.0
    assert measure_stats([0.5 + 1e-9] * 8).recall == 1.0


@checklist("re-initialization protocol fixtures")
def test_vot_protocol_fixtures():
    assert vot_anchors(120, 50) == [
        (0, "forward"), (50, "forward"), (100, "backward"),
    ]

    runs = [
        VotRun(anchor=0, direction="forward",
               overlaps=[1.0, 0.8, 0.6, 0.4, 0.3], subseq_len=5),
        VotRun(anchor=50, direction="backward",
               overlaps=[0.9, 0.7, 0.05], subseq_len=6),
    ]
    sc = vot_evaluate(runs, VotParams(fail_tau=0.1, burn_in=1, eao_lo=2, eao_hi=4))
    assert abs(sc.accuracy - 2.8 / 5) <= 1e-9
    assert abs(sc.robustness - 7 / 11) <= 1e-9
    phi2 = ((1.0 + 0.8) / 2 + (0.9 + 0.7) / 2) / 2
    phi3 = ((1.0 + 0.8 + 0.6) / 3 + (0.9 + 0.7 + 0.0) / 3) / 2
    phi4 = ((1.0 + 0.8 + 0.6 + 0.4) / 4 + (0.9 + 0.7 + 0.0 + 0.0) / 4) / 2
    assert abs(sc.eao - (phi2 + phi3 + phi4) / 3) <= 1e-9

    # burn-in frames must not reach the accuracy average: planting wildly
    # different sentinel values there must not change the score
    params = VotParams(fail_tau=0.1, burn_in=2, eao_lo=2, eao_hi=2)
    tail = [0.5, 0.7, 0.9, 0.6]
    scores = set()
    for sentinel in (0.111, 0.999):
        runs = [VotRun(anchor=0, direction="forward",
                       overlaps=[sentinel, sentinel] + tail, subseq_len=6)]
        scores.add(vot_evaluate(runs, params).accuracy)
    assert scores == {sum(tail) / 4}


@checklist("correlation-filter numerics", budget_s=60.0)
def test_kcf_numerics():
    rng = np.random.default_rng(400)
    for size in (8, 16):
        x = rng.standard_normal((size, size))
        z = rng.standard_normal((size, size))
        k = kernel_correlation(x, z, 0.5)
        brute = np.zeros_like(k)
        for dy in range(size):
            for dx in range(size):
                d = ((x - np.roll(z, (-dy, -dx), axis=(0, 1))) ** 2).sum()
                brute[dy, dx] = np.exp(-d / (0.5 * 0.5 * x.size))
        np.testing.assert_allclose(k, brute, atol=1e-6)

    from segtrack.trackers import KcfModel

    n = 32
    g = np.arange(n) - n // 2
    yy, xx = np.meshgrid(g, g, indexing="ij")
    y = np.exp(-0.5 * (yy**2 + xx**2) / 2.0**2)
    y = np.roll(y, (-(n // 2), -(n // 2)), axis=(0, 1))
    model = KcfModel(np.fft.fft2(y), {"sigma": 0.5, "lambda": 1e-4, "eta": 0.02})
    patch = rng.standard_normal((n, n))
    model.train(patch, eta=1.0)
    for shift in [(0, 0), (5, 9), (30, 2)]:
        resp = model.response(np.roll(patch, shift, axis=(0, 1)))
        assert np.unravel_index(np.argmax(resp), resp.shape) == shift

    seq = gen_synthetic(
        SyntheticSpec(shape="rect", size=(200, 100), n_frames=60, start=(30, 50),
                      velocity=(2, 0), shape_size=(20, 20), seed=11)
    )
    tracker = KcfTracker()
    boxes = seq.gt_boxes(1)
    tracker.init(seq.frames[0], boxes[0])
    errs = [
        np.hypot(b.cx - g.cx, b.cy - g.cy)
        for b, g in ((tracker.update(seq.frames[i]), boxes[i])
                     for i in range(1, len(seq)))
    ]
    assert np.mean(errs) <= 3.0


@checklist("searching-area sweep rows and byte determinism")
def test_k_sweep_determinism(tmp_path):
    spec = {
        "sequences": [
            {"name": "walk", "shape": "rect", "size": [100, 80], "n_frames": 12,
             "start": [25, 40], "velocity": [2, 0], "shape_size": [16, 12],
             "seed": 3},
            {"name": "blob", "shape": "ellipse", "size": [100, 80], "n_frames": 12,
             "start": [60, 40], "velocity": [0, 1], "shape_size": [24, 18],
             "seed": 4},
        ]
    }
    root = tmp_path / "data"
    root.mkdir()
    (root / "synthetic.json").write_text(json.dumps(spec))
    cfg_file = tmp_path / "cfg.ini"
    cfg_file.write_text(
        f"[dataset]\nkind = synthetic\nroot = {root}\n"
        "[tracker]\nname = ncc\n[segmenter]\nname = colorbayes\n"
        f"[run]\nout = PLACEHOLDER\nseed = 7\nk_list = 1,1.25,1.5,1.75,2\n"
    )
    blobs = []
    for name in ("first", "second"):
        cfg = load_config(str(cfg_file), overrides=[f"run.out={tmp_path}/{name}"])
        paths = run_benchmark(cfg)
        blobs.append(
            (open(paths["json"], "rb").read(), open(paths["csv"], "rb").read())
        )
        report = json.loads(blobs[-1][0])
        ks = sorted({row["k"] for row in report["rows"]})
        assert ks == [1.0, 1.25, 1.5, 1.75, 2.0]
        for seq_obj in {(r["sequence"], r["object"]) for r in report["rows"]}:
            rows = [r for r in report["rows"]
                    if (r["sequence"], r["object"]) == seq_obj]
            assert len(rows) == 5
    assert blobs[0] == blobs[1]


@checklist("mask run-length codec roundtrip and error typing")
def test_rle_roundtrip_and_errors():
    rng = np.random.default_rng(500)
    for _ in range(1000):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        m = (rng.random((h, w)) < rng.uniform(0, 1)).astype(np.uint8)
        np.testing.assert_array_equal(rle_decode(rle_encode(m), w, h), m)

    for line in ("", "x0,0,1,1,0 1", "m0,0,2,2,0 3", "m0,0,2,2,nope",
                 "m90,90,5,5,0 25", "m0,0,2,2,-4 8"):
        with pytest.raises(DataError):
            rle_decode(line, 32, 32)
