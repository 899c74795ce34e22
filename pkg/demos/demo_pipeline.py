"""Turn a bounding-box tracker into a segmentation tracker.

Generates a small synthetic sequence, runs the KCF tracker with the color
segmenter on top, and reports per-frame J alongside the rectangle baseline
so you can see what the segmenter adds over the raw box.
"""

import numpy as np

from segtrack import (
    KcfTracker,
    OracleTracker,
    PipelineConfig,
    RectFillSegmenter,
    run_sequence,
)
from segtrack.bench import SyntheticSpec, gen_synthetic
from segtrack.metrics import iou, measure_stats
from segtrack.segmenters import ColorBayesSegmenter

seq = gen_synthetic(
    SyntheticSpec(
        name="demo", shape="ellipse", size=(200, 120), n_frames=40,
        start=(40, 60), velocity=(3, 0), shape_size=(36, 26),
        color=(225, 45, 35), seed=1,
    )
)
print(f"sequence {seq.name!r}: {len(seq)} frames of {seq.width}x{seq.height}")

config = PipelineConfig(k=1.5)
runs = {
    "kcf + colorbayes": (KcfTracker(), ColorBayesSegmenter()),
    "kcf + box-fill": (KcfTracker(), RectFillSegmenter()),
    "oracle + box-fill": (OracleTracker(seq.gt_boxes(1)), RectFillSegmenter()),
}

for label, (tracker, segmenter) in runs.items():
    record = run_sequence(tracker, segmenter, seq, 1, config)
    js = [
        iou(fr.mask, seq.gt_masks[1][t])
        for t, fr in enumerate(record.frames, start=1)
    ]
    stats = measure_stats(js)
    print(f"  {label:20s} J mean {stats.mean:.3f}  "
          f"recall {stats.recall:.3f}  decay {stats.decay:+.3f}")

print()
print("an ellipse fills pi/4 =", round(np.pi / 4, 3),
      "of its box, which is exactly where the box-fill baseline lands;")
print("the color segmenter recovers the actual shape inside the searching area")
