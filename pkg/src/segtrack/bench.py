"""Benchmark toolkit: dataset loaders, RLE mask storage, synthetic sequence
generation, tracker/segmenter error decomposition, experiment orchestration
with deterministic JSON/CSV reports, and k-sweeps.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import __version__
from .core import (
    BoundingBox,
    Sequence,
    check_mask,
    enclosing_bbox,
    read_frame_png,
    read_id_mask_png,
    rect_to_mask,
    write_frame_png,
    write_id_mask_png,
)
from .errors import ConfigError, DataError, GeometryError, UsageError
from .metrics import (
    VotParams,
    default_boundary_tolerance,
    measure_stats,
    run_vot,
    score_frames,
    valid_scores,
    vot_evaluate,
)
from .pipeline import PipelineConfig, fuse_multiobject, run_sequence, save_run
from .segmenters import (
    ColorBayesSegmenter,
    ExternalSegmenter,
    OracleSegmenter,
    RectFillSegmenter,
)
from .core import TemplateMode
from .trackers import KcfTracker, NccTracker, OracleTracker, StaticTracker

__all__ = [
    "DatasetLayout",
    "ErrorDecomposition",
    "SyntheticSpec",
    "rle_encode",
    "rle_decode",
    "gen_synthetic",
    "load_dataset",
    "write_davis_dataset",
    "decompose_error",
    "BenchConfig",
    "run_benchmark",
    "evaluate_mask_dir",
    "SCHEMA_VERSION",
    "ENDPOINT_ENV",
]

SCHEMA_VERSION = 1
ENDPOINT_ENV = "SEGTRACK_SEGMENTER_ENDPOINT"


# ---------------------------------------------------------------------------
# RLE mask storage (artifact-defined format, used by vot-style layouts):
#   m<x0>,<y0>,<w0>,<h0>,<r1> <r2> ...
# bounding region of the positive pixels, then alternating run lengths in
# row-major order within the region, starting with a zero-run.


def rle_encode(mask):
    mask = check_mask(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return "m0,0,0,0,"
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    region = mask[y0 : y1 + 1, x0 : x1 + 1].reshape(-1)
    runs = []
    current, count = 0, 0
    for v in region:
        if v == current:
            count += 1
        else:
            runs.append(count)
            current, count = v, 1
    runs.append(count)
    if current == 0 and len(runs) > 1:
        pass  # keep the trailing zero-run: runs must cover the region
    return f"m{x0},{y0},{x1 - x0 + 1},{y1 - y0 + 1}," + " ".join(map(str, runs))


def rle_decode(line, W, H):
    if not isinstance(line, str) or not line.startswith("m"):
        raise DataError(f"RLE line must start with 'm': {line[:40]!r}")
    head = line[1:].split(",", 4)
    if len(head) != 5:
        raise DataError(f"RLE header needs 4 comma-separated ints: {line[:40]!r}")
    try:
        x0, y0, w0, h0 = (int(v) for v in head[:4])
    except ValueError as exc:
        raise DataError(f"bad RLE region in {line[:40]!r}") from exc
    runs_text = head[4].split()
    try:
        runs = [int(v) for v in runs_text]
    except ValueError as exc:
        raise DataError(f"bad RLE run in {line[:40]!r}") from exc
    mask = np.zeros((H, W), dtype=np.uint8)
    if w0 == 0 or h0 == 0:
        if any(runs):
            raise DataError("empty RLE region with non-empty runs")
        return mask
    if x0 < 0 or y0 < 0 or x0 + w0 > W or y0 + h0 > H:
        raise DataError(f"RLE region {x0},{y0},{w0},{h0} exceeds {W}x{H}")
    if any(r < 0 for r in runs):
        raise DataError("negative RLE run length")
    if sum(runs) != w0 * h0:
        raise DataError(
            f"RLE runs cover {sum(runs)} pixels, region has {w0 * h0}"
        )
    region = np.zeros(w0 * h0, dtype=np.uint8)
    pos, val = 0, 0
    for r in runs:
        if val:
            region[pos : pos + r] = 1
        pos += r
        val ^= 1
    mask[y0 : y0 + h0, x0 : x0 + w0] = region.reshape(h0, w0)
    return mask


# ---------------------------------------------------------------------------
# Synthetic sequences: a rectangle or ellipse translating over a textured
# background, with exact ground-truth masks.  Deterministic given the seed.


@dataclass(frozen=True)
class SyntheticSpec:
    name: str = "synthetic"
    shape: str = "rect"  # rect | ellipse
    size: tuple = (160, 120)  # W, H
    n_frames: int = 60
    start: tuple = (30.0, 60.0)  # cx, cy at frame 0
    velocity: tuple = (2.0, 0.0)  # px / frame
    shape_size: tuple = (20.0, 14.0)  # w, h
    color: tuple = (230, 60, 40)
    noise: float = 0.0
    seed: int = 0
    allow_exit: bool = False


def _shape_mask(spec, cx, cy, W, H):
    w, h = spec.shape_size
    if spec.shape == "rect":
        return rect_to_mask(BoundingBox(cx, cy, w, h), W, H)
    if spec.shape == "ellipse":
        yy, xx = np.mgrid[0:H, 0:W]
        return (
            ((xx - cx) / (w / 2.0)) ** 2 + ((yy - cy) / (h / 2.0)) ** 2 <= 1.0
        ).astype(np.uint8)
    raise ConfigError(f"unknown synthetic shape {spec.shape!r}")


def gen_synthetic(spec: SyntheticSpec) -> Sequence:
    W, H = spec.size
    rng = np.random.default_rng(spec.seed)
    # low-contrast smoothed background so the moving shape dominates
    base = rng.normal(120.0, 10.0, size=(H, W))
    base = ndimage.uniform_filter(base, size=7)
    bg = np.stack([base + off for off in (0.0, 4.0, -4.0)], axis=2)
    color = np.asarray(spec.color, dtype=np.float64)
    frames, masks = [], []
    for t in range(spec.n_frames):
        cx = spec.start[0] + spec.velocity[0] * t
        cy = spec.start[1] + spec.velocity[1] * t
        m = _shape_mask(spec, cx, cy, W, H)
        if not m.any() and not spec.allow_exit:
            raise GeometryError(
                f"synthetic shape left the frame at t={t} (set allow_exit to permit)"
            )
        img = bg.copy()
        img[m == 1] = color
        if spec.noise > 0:
            img = img + rng.normal(0.0, spec.noise, size=img.shape)
        frames.append(np.clip(np.round(img), 0, 255).astype(np.uint8))
        masks.append(m)
    return Sequence(name=spec.name, frames=frames, gt_masks={1: masks})


def write_davis_dataset(sequences, root, split="val"):
    """Write sequences to disk in the davis-style layout (PNG frames)."""
    os.makedirs(os.path.join(root, "ImageSets"), exist_ok=True)
    names = []
    for seq in sequences:
        names.append(seq.name)
        jdir = os.path.join(root, "JPEGImages", seq.name)
        adir = os.path.join(root, "Annotations", seq.name)
        os.makedirs(jdir, exist_ok=True)
        os.makedirs(adir, exist_ok=True)
        for t, frame in enumerate(seq.frames):
            write_frame_png(os.path.join(jdir, f"{t:05d}.png"), frame)
            ids = np.zeros(frame.shape[:2], dtype=np.int32)
            for obj in seq.object_ids:
                ids[seq.gt_masks[obj][t] == 1] = obj
            write_id_mask_png(os.path.join(adir, f"{t:05d}.png"), ids)
    with open(os.path.join(root, "ImageSets", f"{split}.txt"), "w") as fh:
        fh.write("".join(n + "\n" for n in sorted(names)))


# ---------------------------------------------------------------------------
# Dataset loading


@dataclass(frozen=True)
class DatasetLayout:
    kind: str  # davis-style | vot-style | synthetic
    root: str
    split: str = "val"


def _sorted_images(directory, exts=(".png", ".jpg", ".jpeg")):
    try:
        names = sorted(
            n for n in os.listdir(directory) if os.path.splitext(n)[1].lower() in exts
        )
    except FileNotFoundError as exc:
        raise DataError(f"missing directory {directory}") from exc
    return [os.path.join(directory, n) for n in names]


def _load_davis_sequence(root, name):
    frame_paths = _sorted_images(os.path.join(root, "JPEGImages", name))
    mask_paths = _sorted_images(os.path.join(root, "Annotations", name), (".png",))
    if not frame_paths:
        raise DataError(f"sequence {name!r}: no frames under JPEGImages")
    if len(frame_paths) != len(mask_paths):
        raise DataError(
            f"sequence {name!r}: {len(frame_paths)} frames but "
            f"{len(mask_paths)} annotation masks"
        )
    frames = [read_frame_png(p) for p in frame_paths]
    idmaps = [read_id_mask_png(p) for p in mask_paths]
    h, w = frames[0].shape[:2]
    obj_ids = sorted(
        {int(v) for im in idmaps for v in np.unique(im)} - {0, 255}
    )
    if not obj_ids:
        raise DataError(f"sequence {name!r}: annotations contain no object ids")
    gt = {}
    for obj in obj_ids:
        gt[obj] = []
        for i, im in enumerate(idmaps):
            if im.shape != (h, w):
                raise DataError(f"sequence {name!r}: mask {i} dims {im.shape} != frame")
            gt[obj].append((im == obj).astype(np.uint8))
    return Sequence(name=name, frames=frames, gt_masks=gt)


def _load_vot_sequence(seq_dir):
    name = os.path.basename(seq_dir.rstrip("/"))
    color_dir = os.path.join(seq_dir, "color")
    frame_paths = _sorted_images(color_dir if os.path.isdir(color_dir) else seq_dir)
    if not frame_paths:
        raise DataError(f"sequence {name!r}: no color frames")
    gt_path = os.path.join(seq_dir, "groundtruth.txt")
    if not os.path.isfile(gt_path):
        raise DataError(f"sequence {name!r}: missing {gt_path}")
    frames = [read_frame_png(p) for p in frame_paths]
    h, w = frames[0].shape[:2]
    with open(gt_path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) != len(frames):
        raise DataError(
            f"sequence {name!r}: {len(frames)} frames but {len(lines)} GT lines"
        )
    try:
        masks = [rle_decode(ln, w, h) for ln in lines]
    except DataError as exc:
        raise DataError(f"sequence {name!r}: {exc}") from exc
    return Sequence(name=name, frames=frames, gt_masks={1: masks})


def load_dataset(layout: DatasetLayout):
    """Load all sequences of a dataset, validated; never silently drops."""
    if not os.path.isdir(layout.root):
        raise DataError(f"dataset root {layout.root!r} does not exist")
    if layout.kind == "davis-style":
        split_file = os.path.join(layout.root, "ImageSets", f"{layout.split}.txt")
        if not os.path.isfile(split_file):
            raise DataError(f"missing split file {split_file}")
        with open(split_file) as fh:
            names = [ln.strip() for ln in fh if ln.strip()]
        return [_load_davis_sequence(layout.root, n) for n in names]
    if layout.kind == "vot-style":
        dirs = sorted(
            os.path.join(layout.root, d)
            for d in os.listdir(layout.root)
            if os.path.isdir(os.path.join(layout.root, d))
        )
        if not dirs:
            raise DataError(f"no sequence directories under {layout.root!r}")
        return [_load_vot_sequence(d) for d in dirs]
    if layout.kind == "synthetic":
        spec_file = os.path.join(layout.root, "synthetic.json")
        if not os.path.isfile(spec_file):
            raise DataError(f"missing {spec_file}")
        with open(spec_file) as fh:
            data = json.load(fh)
        seqs = []
        for entry in data.get("sequences", []):
            entry = {
                k: tuple(v) if isinstance(v, list) else v for k, v in entry.items()
            }
            seqs.append(gen_synthetic(SyntheticSpec(**entry)))
        if not seqs:
            raise DataError(f"{spec_file} describes no sequences")
        return seqs
    raise ConfigError(f"unknown dataset kind {layout.kind!r}")


# ---------------------------------------------------------------------------
# Error decomposition


@dataclass(frozen=True)
class ErrorDecomposition:
    e_tracker: float
    e_segmenter: float
    measure: str = "A"


def decompose_error(p_oracle_rect, p_t_rect, p_oracle_s, p_t_s, measure="A"):
    """Split the oracle-vs-real performance gap into a localization part and
    a shape part: e_T = P(oracle, rect) - P(T, rect);
    e_S = P(oracle, S) - (P(T, S) + e_T)."""
    e_t = p_oracle_rect - p_t_rect
    e_s = p_oracle_s - (p_t_s + e_t)
    return ErrorDecomposition(e_tracker=e_t, e_segmenter=e_s, measure=measure)


# ---------------------------------------------------------------------------
# Benchmark configuration (flat INI sections; CLI flags override file keys)


@dataclass
class BenchConfig:
    layout: DatasetLayout = None
    tracker: str = "kcf"
    tracker_params: dict = field(default_factory=dict)
    segmenter: str = "rectfill"
    segmenter_params: dict = field(default_factory=dict)
    protocol: str = "davis-ope"  # davis-ope | vot-anchors
    vot_params: VotParams = field(default_factory=VotParams)
    k_list: tuple = (1.5,)
    tau: float = 0.5
    seed: int = 0
    workers: int = 1
    out: str = "runs/out"
    save_masks: bool = False
    allow_gt_segmenter: bool = False
    raw: dict = field(default_factory=dict)

    def config_hash(self):
        # where results land and how many workers compute them does not
        # change the results, so keep those keys out of the hash
        skip = {"run.out", "run.workers"}
        lines = sorted(
            f"{k}={v}" for k, v in self.raw.items() if k not in skip
        )
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


_TRACKERS = {"static", "oracle", "ncc", "kcf"}
_SEGMENTERS = {"rectfill", "colorbayes", "oracle", "external"}


def _getfloats(text):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def load_config(path=None, overrides=None):
    """Read an INI config file plus ``section.key=value`` overrides."""
    cp = configparser.ConfigParser()
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file {path!r} not found")
        cp.read(path)
    for ov in overrides or []:
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override must be section.key=value, got {ov!r}")
        key, value = ov.split("=", 1)
        section, opt = key.split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, opt, value)

    raw = {
        f"{s}.{k}": v for s in cp.sections() for k, v in cp.items(s)
    }
    cfg = BenchConfig(raw=raw)

    if cp.has_section("dataset"):
        cfg.layout = DatasetLayout(
            kind=cp.get("dataset", "kind", fallback="synthetic"),
            root=cp.get("dataset", "root", fallback="."),
            split=cp.get("dataset", "split", fallback="val"),
        )
    if cp.has_section("tracker"):
        cfg.tracker = cp.get("tracker", "name", fallback=cfg.tracker)
        cfg.tracker_params = {
            k: v for k, v in cp.items("tracker") if k != "name"
        }
    if cp.has_section("segmenter"):
        cfg.segmenter = cp.get("segmenter", "name", fallback=cfg.segmenter)
        cfg.segmenter_params = {
            k: v for k, v in cp.items("segmenter") if k != "name"
        }
    if cp.has_section("protocol"):
        cfg.protocol = cp.get("protocol", "name", fallback=cfg.protocol)
        cfg.vot_params = VotParams(
            fail_tau=cp.getfloat("protocol", "fail_tau", fallback=VotParams.fail_tau),
            burn_in=cp.getint("protocol", "burn_in", fallback=VotParams.burn_in),
            interval=cp.getint("protocol", "interval", fallback=VotParams.interval),
            eao_lo=cp.getint("protocol", "eao_lo", fallback=VotParams.eao_lo),
            eao_hi=cp.getint("protocol", "eao_hi", fallback=VotParams.eao_hi),
        )
    if cp.has_section("run"):
        r = cp["run"]
        cfg.out = r.get("out", cfg.out)
        cfg.tau = r.getfloat("tau", cfg.tau)
        cfg.seed = r.getint("seed", cfg.seed)
        cfg.workers = r.getint("workers", cfg.workers)
        cfg.save_masks = r.getboolean("save_masks", cfg.save_masks)
        cfg.allow_gt_segmenter = r.getboolean(
            "allow_gt_segmenter", cfg.allow_gt_segmenter
        )
        if "k" in r:
            cfg.k_list = (r.getfloat("k"),)
        if "k_list" in r:
            cfg.k_list = _getfloats(r.get("k_list"))

    if cfg.tracker not in _TRACKERS:
        raise ConfigError(f"unknown tracker {cfg.tracker!r} (choose {_TRACKERS})")
    if cfg.segmenter not in _SEGMENTERS:
        raise ConfigError(f"unknown segmenter {cfg.segmenter!r} (choose {_SEGMENTERS})")
    if cfg.protocol not in ("davis-ope", "vot-anchors"):
        raise ConfigError(f"unknown protocol {cfg.protocol!r}")
    if cfg.segmenter == "oracle" and not cfg.allow_gt_segmenter:
        raise ConfigError(
            "the oracle segmenter is excluded from benchmarks by default; "
            "set run.allow_gt_segmenter = true to use it"
        )
    if cfg.layout is None:
        raise ConfigError("config needs a [dataset] section")
    return cfg


def make_tracker_factory(cfg: BenchConfig):
    p = cfg.tracker_params

    def factory(seq, obj):
        if cfg.tracker == "static":
            return StaticTracker()
        if cfg.tracker == "oracle":
            return OracleTracker(seq.gt_boxes(obj))
        if cfg.tracker == "ncc":
            return NccTracker(search_radius=int(p.get("search_radius", 16)))
        return KcfTracker(
            lambda_=float(p.get("lambda", 1e-4)),
            sigma=float(p.get("sigma", 0.5)),
            eta=float(p.get("eta", 0.02)),
            padding=float(p.get("padding", 1.5)),
            out_sigma_factor=float(p.get("out_sigma_factor", 0.1)),
        )

    return factory


_MODE_NAMES = {
    "bbox": TemplateMode.BBOX_CHANNEL,
    "crop": TemplateMode.IMAGE_CROP,
    "crop+mask": TemplateMode.CROP_WITH_MASK,
}


def make_segmenter_factory(cfg: BenchConfig):
    p = cfg.segmenter_params

    def factory(seq, obj):
        if cfg.segmenter == "rectfill":
            return RectFillSegmenter()
        if cfg.segmenter == "colorbayes":
            return ColorBayesSegmenter(
                bins=int(p.get("bins", 16)),
                eps=float(p.get("eps", 1e-6)),
                keep_largest_component=p.get("keep_largest_component", "true")
                in ("true", "1", "yes"),
            )
        if cfg.segmenter == "oracle":
            return OracleSegmenter(seq.gt_masks[obj])
        endpoint = os.environ.get(ENDPOINT_ENV) or p.get("endpoint")
        if not endpoint:
            raise ConfigError(
                f"external segmenter needs segmenter.endpoint or ${ENDPOINT_ENV}"
            )
        res = p.get("input_resolution")
        if res:
            try:
                w, h = (int(v) for v in res.lower().split("x"))
            except ValueError as exc:
                raise ConfigError(f"bad input_resolution {res!r}") from exc
            res = (w, h)
        mode = _MODE_NAMES.get(p.get("template_mode", "bbox"))
        if mode is None:
            raise ConfigError(f"bad template_mode {p.get('template_mode')!r}")
        return ExternalSegmenter(
            endpoint,
            template_mode=mode,
            input_resolution=res,
            template_context_factor=float(p.get("template_context_factor", 1.0)),
        )

    return factory


# ---------------------------------------------------------------------------
# Evaluation drivers


def _davis_eval_sequence(seq, tracker_factory, segmenter_factory, pcfg):
    """One-pass run for every object, multi-object fusion, per-object J/F."""
    records = {}
    for obj in seq.object_ids:
        if not seq.gt_masks[obj][0].any():
            warnings.warn(
                f"{seq.name!r} object {obj}: empty GT at frame 0, skipped",
                stacklevel=2,
            )
            continue
        tracker = tracker_factory(seq, obj)
        segmenter = segmenter_factory(seq, obj)
        try:
            records[obj] = run_sequence(tracker, segmenter, seq, obj, pcfg)
        finally:
            segmenter.close()
    theta = default_boundary_tolerance(seq.width, seq.height)
    pred = {obj: [] for obj in records}
    for t in range(len(seq) - 1):
        if len(records) > 1:
            fused = fuse_multiobject(
                {obj: rec.frames[t].confidence for obj, rec in records.items()},
                pcfg.tau,
            )
        else:
            fused = {obj: rec.frames[t].mask for obj, rec in records.items()}
        for obj in records:
            pred[obj].append(fused[obj])
    results = {}
    for obj, rec in records.items():
        gts = seq.gt_masks[obj][1:]
        scores = score_frames(pred[obj], gts, theta)
        jvals = valid_scores(scores, "j")
        fvals = valid_scores(scores, "f")
        if not jvals:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            results[obj] = {
                "j": measure_stats(jvals),
                "f": measure_stats(fvals),
                "record": rec,
                "pred_masks": pred[obj],
            }
    return results


def _round(v, nd=9):
    return round(float(v), nd)


def _run_one_combo(seqs, cfg, k):
    pcfg = PipelineConfig(k=k, tau=cfg.tau)
    tf = make_tracker_factory(cfg)
    sf = make_segmenter_factory(cfg)
    rows, records = [], []

    def eval_seq(seq):
        if cfg.protocol == "davis-ope":
            return ("davis", _davis_eval_sequence(seq, tf, sf, pcfg))
        per_obj = {}
        for obj in seq.object_ids:
            per_obj[obj] = run_vot(tf, sf, seq, obj, pcfg, cfg.vot_params)
        return ("vot", per_obj)

    if cfg.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            outputs = list(ex.map(eval_seq, seqs))
    else:
        outputs = [eval_seq(s) for s in seqs]

    if cfg.protocol == "davis-ope":
        agg_j, agg_f = [], []
        for seq, (_, per_obj) in zip(seqs, outputs):
            for obj, res in per_obj.items():
                rows.append(
                    {
                        "sequence": seq.name,
                        "object": obj,
                        "k": k,
                        "J_M": _round(res["j"].mean),
                        "J_R": _round(res["j"].recall),
                        "J_D": _round(res["j"].decay),
                        "F_M": _round(res["f"].mean),
                        "F_R": _round(res["f"].recall),
                        "F_D": _round(res["f"].decay),
                    }
                )
                agg_j.append(res["j"])
                agg_f.append(res["f"])
                records.append((seq.name, obj, res["record"], res.get("pred_masks")))
        if not agg_j:
            raise DataError("no evaluable objects in the dataset")
        aggregate = {
            "k": k,
            "J_M": _round(np.mean([s.mean for s in agg_j])),
            "J_R": _round(np.mean([s.recall for s in agg_j])),
            "J_D": _round(np.mean([s.decay for s in agg_j])),
            "F_M": _round(np.mean([s.mean for s in agg_f])),
            "F_R": _round(np.mean([s.recall for s in agg_f])),
            "F_D": _round(np.mean([s.decay for s in agg_f])),
        }
    else:
        all_runs = []
        for seq, (_, per_obj) in zip(seqs, outputs):
            for obj, runs in per_obj.items():
                if not runs:
                    continue
                sc = vot_evaluate(runs, cfg.vot_params)
                rows.append(
                    {
                        "sequence": seq.name,
                        "object": obj,
                        "k": k,
                        "A": _round(sc.accuracy),
                        "R": _round(sc.robustness),
                        "EAO": _round(sc.eao),
                    }
                )
                all_runs.extend(runs)
        if not all_runs:
            raise DataError("no evaluable VOT runs in the dataset")
        sc = vot_evaluate(all_runs, cfg.vot_params)
        aggregate = {
            "k": k,
            "A": _round(sc.accuracy),
            "R": _round(sc.robustness),
            "EAO": _round(sc.eao),
        }
    return rows, aggregate, records


def _speed_rows(records):
    """Timing rows per record plus a segmentation-only summary row."""
    from .pipeline import measure_speed

    rows = []
    seg_times = []
    for seq_name, obj, rec, _ in records:
        try:
            sp = measure_speed(rec)
        except UsageError:
            continue
        rows.append(
            {
                "sequence": seq_name,
                "object": obj,
                "mean_s": sp["mean_s"],
                "fps": sp["fps"],
            }
        )
        seg_times.extend(f.t_segment for f in rec.frames)
    if seg_times:
        seg_mean = sum(seg_times) / len(seg_times)
        rows.append(
            {
                "sequence": "(no tracker)",
                "object": 0,
                "mean_s": seg_mean,
                "fps": (1.0 / seg_mean) if seg_mean > 0 else float("inf"),
            }
        )
    return rows


def _write_report(outdir, cfg, rows, aggregates):
    os.makedirs(outdir, exist_ok=True)
    measures = sorted({k for row in rows for k in row} - {"sequence", "object", "k"})
    report = {
        "schema_version": SCHEMA_VERSION,
        "provenance": {
            "config_hash": cfg.config_hash(),
            "segtrack_version": __version__,
            "seed": cfg.seed,
            "tracker": cfg.tracker,
            "segmenter": cfg.segmenter,
            "protocol": cfg.protocol,
            "protocol_constants": {
                "fail_tau": cfg.vot_params.fail_tau,
                "burn_in": cfg.vot_params.burn_in,
                "interval": cfg.vot_params.interval,
                "eao_lo": cfg.vot_params.eao_lo,
                "eao_hi": cfg.vot_params.eao_hi,
                "tau": cfg.tau,
            },
        },
        "aggregates": aggregates,
        "rows": rows,
    }
    json_path = os.path.join(outdir, "results.json")
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    csv_path = os.path.join(outdir, "results.csv")
    header = ["tracker", "segmenter", "k", "sequence", "object"] + measures
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                [cfg.tracker, cfg.segmenter, repr(row["k"]), row["sequence"],
                 str(row["object"])]
                + [repr(row[m]) for m in measures]
            )
        )
    for agg in aggregates:
        lines.append(
            ",".join(
                [cfg.tracker, cfg.segmenter, repr(agg["k"]), "(all)", "-"]
                + [repr(agg.get(m, "")) for m in measures]
            )
        )
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return {"json": json_path, "csv": csv_path}


def run_benchmark(cfg: BenchConfig):
    """Execute the configured experiment (all k values) and write reports.

    Returns the paths of the written files.  Metric reports are byte
    deterministic for a fixed config and seed; wall-clock timings go to a
    separate speed report excluded from that guarantee.
    """
    seqs = load_dataset(cfg.layout)
    all_rows, aggregates, all_records = [], [], []
    for k in cfg.k_list:
        rows, agg, records = _run_one_combo(seqs, cfg, k)
        all_rows.extend(rows)
        aggregates.append(agg)
        all_records.extend(records)
    paths = _write_report(cfg.out, cfg, all_rows, aggregates)

    speed_rows = _speed_rows(all_records)
    speed_path = os.path.join(cfg.out, "speed.json")
    with open(speed_path, "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "rows": speed_rows}, fh, indent=2)
        fh.write("\n")
    paths["speed"] = speed_path

    if cfg.save_masks:
        for seq_name, obj, rec, _ in all_records:
            save_run(rec, os.path.join(cfg.out, "runs", seq_name, f"obj{obj}"))
    return paths


def evaluate_mask_dir(pred_root, layout: DatasetLayout, tau_unused=None):
    """Score pre-computed mask directories against a dataset's ground truth.

    Expects ``pred_root/<sequence>/<NNNNN>.png`` indexed PNGs (palette
    index = object id), one per frame starting at frame 1.
    """
    seqs = load_dataset(layout)
    rows = []
    for seq in seqs:
        pdir = os.path.join(pred_root, seq.name)
        paths = _sorted_images(pdir, (".png",))
        if len(paths) not in (len(seq) - 1, len(seq)):
            raise DataError(
                f"{seq.name!r}: {len(paths)} prediction masks for "
                f"{len(seq)} frames (want T-1 or T)"
            )
        idmaps = [read_id_mask_png(p) for p in paths]
        if len(idmaps) == len(seq):
            idmaps = idmaps[1:]
        theta = default_boundary_tolerance(seq.width, seq.height)
        for obj in seq.object_ids:
            preds = [(im == obj).astype(np.uint8) for im in idmaps]
            scores = score_frames(preds, seq.gt_masks[obj][1:], theta)
            jv = valid_scores(scores, "j")
            fv = valid_scores(scores, "f")
            if not jv:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                js = measure_stats(jv)
                fs = measure_stats(fv)
            rows.append(
                {
                    "sequence": seq.name,
                    "object": obj,
                    "J_M": _round(js.mean),
                    "J_R": _round(js.recall),
                    "J_D": _round(js.decay),
                    "F_M": _round(fs.mean),
                    "F_R": _round(fs.recall),
                    "F_D": _round(fs.decay),
                }
            )
    return rows
