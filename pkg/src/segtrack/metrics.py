"""Scoring: mask IoU, DAVIS-style J/F statistics (mean/recall/decay),
boundary F-measure, and the anchor-based VOT2020-style protocol
(accuracy A, robustness R, expected average overlap).

This is a documented reimplementation of the stated protocol, not a
bit-compatible port of any official toolkit.  Protocol constants
(failure threshold, burn-in, anchor interval, EAO window) are explicit
and overridable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage

from .core import Sequence, check_mask, enclosing_bbox
from .errors import ContractError, ParameterError, UsageError
from .pipeline import PipelineConfig, run_sequence

__all__ = [
    "FrameScore",
    "MeasureStats",
    "VotParams",
    "VotRun",
    "VotScores",
    "iou",
    "boundary_f",
    "default_boundary_tolerance",
    "score_frames",
    "measure_stats",
    "vot_anchors",
    "vot_evaluate",
    "run_vot",
]


@dataclass(frozen=True)
class FrameScore:
    j: float
    f: float
    valid: bool


@dataclass(frozen=True)
class MeasureStats:
    mean: float
    recall: float
    decay: float


@dataclass(frozen=True)
class VotParams:
    fail_tau: float = 0.1
    burn_in: int = 10
    interval: int = 50
    eao_lo: int = 115
    eao_hi: int = 755


@dataclass
class VotRun:
    """One anchored sub-sequence run: per-frame overlaps from the first
    predicted frame after init to end-or-failure."""

    anchor: int
    direction: str  # "forward" | "backward"
    overlaps: list
    subseq_len: int  # predicted frames the full sub-sequence would have
    failed_at: int | None = None


@dataclass(frozen=True)
class VotScores:
    accuracy: float
    robustness: float
    eao: float


def iou(a, b):
    """Pixel IoU; two empty masks count as a perfect 1."""
    a = check_mask(a)
    b = check_mask(b)
    if a.shape != b.shape:
        raise ContractError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    return 1.0 if union == 0 else inter / union


def _boundary(mask):
    """4-connected boundary: positive pixels with a background 4-neighbour
    (pixels on the image border count as boundary)."""
    m = mask.astype(bool)
    if not m.any():
        return m
    interior = np.ones_like(m)
    interior[1:, :] &= m[:-1, :]
    interior[:-1, :] &= m[1:, :]
    interior[:, 1:] &= m[:, :-1]
    interior[:, :-1] &= m[:, 1:]
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    return m & ~interior


def default_boundary_tolerance(W, H):
    """DAVIS convention: 0.8% of the image diagonal."""
    return 0.008 * math.hypot(W, H)


def boundary_f(pred, gt, theta=None):
    """Boundary F-measure with Euclidean distance tolerance theta."""
    pred = check_mask(pred)
    gt = check_mask(gt)
    if pred.shape != gt.shape:
        raise ContractError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    if theta is None:
        theta = default_boundary_tolerance(pred.shape[1], pred.shape[0])
    if theta < 0:
        raise ParameterError("theta must be >= 0")
    pb = _boundary(pred)
    gb = _boundary(gt)
    if not pb.any() and not gb.any():
        return 1.0
    if not pb.any() or not gb.any():
        return 0.0
    dist_to_g = ndimage.distance_transform_edt(~gb)
    dist_to_p = ndimage.distance_transform_edt(~pb)
    precision = float(np.count_nonzero(dist_to_g[pb] <= theta)) / pb.sum()
    recall = float(np.count_nonzero(dist_to_p[gb] <= theta)) / gb.sum()
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_frames(pred_masks, gt_masks, theta=None):
    """Per-frame J and F for aligned mask lists; frames with empty GT are
    flagged invalid rather than scored."""
    scores = []
    for p, g in zip(pred_masks, gt_masks):
        if not check_mask(g).any():
            scores.append(FrameScore(j=0.0, f=0.0, valid=False))
        else:
            scores.append(FrameScore(j=iou(p, g), f=boundary_f(p, g, theta), valid=True))
    return scores


def valid_scores(scores, measure):
    """Pull one measure ('j' or 'f') from FrameScores, valid frames only."""
    return [getattr(s, measure) for s in scores if s.valid]


def _quartile_bins(n):
    base, rem = divmod(n, 4)
    sizes = [base + (1 if i < rem else 0) for i in range(4)]
    out, start = [], 0
    for s in sizes:
        out.append((start, start + s))
        start += s
    return out


def measure_stats(scores):
    """Mean, recall (> 0.5, strict), and first-minus-last-quartile decay of
    one score list (valid frames only, in temporal order)."""
    vals = [float(s) for s in scores]
    if not vals:
        raise UsageError("measure_stats on empty input")
    mean = sum(vals) / len(vals)
    recall = sum(1 for v in vals if v > 0.5) / len(vals)
    if len(vals) < 4:
        warnings.warn("fewer than 4 frames: decay reported as 0", stacklevel=2)
        decay = 0.0
    else:
        bins = _quartile_bins(len(vals))
        first = vals[bins[0][0] : bins[0][1]]
        last = vals[bins[3][0] : bins[3][1]]
        # bins can differ in size by one; exact rational means keep the
        # decay of a constant sequence at exactly zero
        decay = float(
            sum(Fraction(v) for v in first) / len(first)
            - sum(Fraction(v) for v in last) / len(last)
        )
    return MeasureStats(mean=mean, recall=recall, decay=decay)


def vot_anchors(seq_len, interval=50):
    """Anchor frames every ``interval``; each runs in the direction of the
    longer remaining sub-sequence (forward wins ties)."""
    if interval < 1:
        raise ParameterError("anchor interval must be >= 1")
    out = []
    for a in range(0, seq_len, interval):
        forward = (seq_len - a) >= (a + 1)
        out.append((a, "forward" if forward else "backward"))
    return out


def _truncate_at_failure(overlaps, fail_tau):
    """Index of the first overlap below fail_tau, or None."""
    for i, v in enumerate(overlaps):
        if v < fail_tau:
            return i
    return None


def vot_evaluate(runs, params: VotParams = VotParams()):
    """Aggregate anchored runs into accuracy, robustness, and EAO.

    Accuracy averages overlaps over tracked frames, skipping the first
    ``burn_in`` frames after each init and everything at/after failure.
    Robustness is total frames tracked over total sub-sequence length.
    EAO averages, over N in [eao_lo, eao_hi], the mean overlap of the
    first N frames per run; failed runs are zero-padded, unfailed runs
    shorter than N are excluded from that N (Ns with no qualifying run
    are skipped).
    """
    if not runs:
        raise UsageError("vot_evaluate on empty run list")
    acc_vals = []
    tracked_total = 0
    length_total = 0
    padded = []
    for r in runs:
        fail = _truncate_at_failure(r.overlaps, params.fail_tau)
        end = len(r.overlaps) if fail is None else fail
        acc_vals.extend(r.overlaps[params.burn_in : end])
        tracked_total += end
        length_total += r.subseq_len
        padded.append((list(r.overlaps[:end]), fail is not None))
    accuracy = sum(acc_vals) / len(acc_vals) if acc_vals else 0.0
    robustness = tracked_total / length_total if length_total else 0.0

    phis = []
    for n in range(params.eao_lo, params.eao_hi + 1):
        per_run = []
        for ov, failed in padded:
            if failed:
                head = ov[:n] + [0.0] * max(0, n - len(ov))
            elif len(ov) >= n:
                head = ov[:n]
            else:
                continue
            per_run.append(sum(head) / n)
        if per_run:
            phis.append(sum(per_run) / len(per_run))
    eao = sum(phis) / len(phis) if phis else 0.0
    return VotScores(accuracy=accuracy, robustness=robustness, eao=eao)


def _subsequence(seq: Sequence, object_id, anchor, direction):
    if direction == "forward":
        idx = range(anchor, len(seq))
    else:
        idx = range(anchor, -1, -1)
    frames = [seq.frames[i] for i in idx]
    masks = [seq.gt_masks[object_id][i] for i in idx]
    return Sequence(
        name=f"{seq.name}@{anchor}{'f' if direction == 'forward' else 'b'}",
        frames=frames,
        gt_masks={object_id: masks},
    )


def run_vot(tracker_factory, segmenter_factory, seq: Sequence, object_id,
            cfg: PipelineConfig, params: VotParams = VotParams()):
    """Execute the anchored protocol over one sequence/object.

    ``tracker_factory(sub_seq, object_id)`` and ``segmenter_factory(...)``
    build fresh instances per anchor.  Each run stops at the first frame
    whose IoU drops below the failure threshold.  Anchors whose GT mask is
    empty are skipped.
    """
    runs = []
    for anchor, direction in vot_anchors(len(seq), params.interval):
        if not seq.gt_masks[object_id][anchor].any():
            continue
        sub = _subsequence(seq, object_id, anchor, direction)
        if len(sub) < 2:
            continue
        tracker = tracker_factory(sub, object_id)
        segmenter = segmenter_factory(sub, object_id)
        rec = run_sequence(tracker, segmenter, sub, object_id, cfg)
        segmenter.close()
        overlaps = []
        failed_at = None
        for t, fr in enumerate(rec.frames):
            gt = sub.gt_masks[object_id][t + 1]
            ov = iou(fr.mask, gt) if gt.any() else (1.0 if not fr.mask.any() else 0.0)
            overlaps.append(ov)
            if ov < params.fail_tau:
                failed_at = t
                break
        runs.append(
            VotRun(
                anchor=anchor,
                direction=direction,
                overlaps=overlaps,
                subseq_len=len(sub) - 1,
                failed_at=failed_at,
            )
        )
    return runs
