"""The two evaluation protocols and the error decomposition.

Walks through mean/recall/decay statistics, the anchor-based
re-initialization protocol (accuracy / robustness / expected average
overlap), and how differencing oracle runs splits an end-to-end score into
tracker error and segmenter error.
"""

from segtrack.bench import decompose_error
from segtrack.metrics import (
    VotParams,
    VotRun,
    measure_stats,
    vot_anchors,
    vot_evaluate,
)

# 1. per-sequence statistics
scores = [1 - i / 39 for i in range(40)]  # a sequence slowly falling apart
stats = measure_stats(scores)
print("linearly degrading J scores:")
print(f"  mean {stats.mean:.3f}, recall (>0.5) {stats.recall:.3f}, "
      f"decay (first minus last quartile) {stats.decay:.3f}")

# 2. anchors: one sub-sequence every 50 frames, run toward the longer side
print("\nanchors for a 120-frame sequence, interval 50:")
for anchor, direction in vot_anchors(120, 50):
    print(f"  start at frame {anchor:3d}, run {direction}")

# 3. accuracy / robustness / EAO from overlap traces
runs = [
    VotRun(anchor=0, direction="forward",
           overlaps=[1.0, 0.8, 0.6, 0.4, 0.3], subseq_len=5),
    VotRun(anchor=50, direction="backward",
           overlaps=[0.9, 0.7, 0.05], subseq_len=6),  # fails on its 3rd frame
]
scores = vot_evaluate(runs, VotParams(fail_tau=0.1, burn_in=1, eao_lo=2, eao_hi=4))
print("\ntwo anchored runs, one with a tracking failure:")
print(f"  accuracy   {scores.accuracy:.4f}   (tracked frames after burn-in)")
print(f"  robustness {scores.robustness:.4f}   (fraction of frames tracked)")
print(f"  EAO        {scores.eao:.4f}   (overlap curve averaged over lengths 2..4)")

# 4. whose fault is a bad score?
print("\nerror decomposition from four benchmark scores")
print("(oracle-box/rect, tracker/rect, oracle-box/segmenter, tracker/segmenter):")
for inputs in [(0.519, 0.440, 0.809, 0.638), (0.519, 0.464, 0.744, 0.691)]:
    d = decompose_error(*inputs)
    print(f"  {inputs} -> tracker error {d.e_tracker:+.3f}, "
          f"segmenter error {d.e_segmenter:+.3f}")
print("a negative segmenter error means the segmenter recovered some of the")
print("overlap that the tracker's imperfect boxes lost")
