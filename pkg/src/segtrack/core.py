"""Raster and geometry primitives.

Frames are (H, W, 3) uint8 arrays, binary masks (H, W) uint8 arrays with
values in {0, 1}, probability maps (H, W) float64 arrays in [0, 1].
Coordinate convention: (0, 0) is the center of the top-left pixel,
x indexes columns, y indexes rows.  Crop sizes round half-up.
All operations are pure: same inputs give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from PIL import Image

from .errors import (
    ContractError,
    EmptyTargetError,
    GeometryError,
    ParameterError,
)

__all__ = [
    "BoundingBox",
    "Placement",
    "SearchingArea",
    "TemplateMode",
    "Template",
    "Sequence",
    "round_half_up",
    "check_frame",
    "check_mask",
    "check_probmap",
    "crop_searching_area",
    "crop_mask",
    "paste_map",
    "enclosing_bbox",
    "rect_to_mask",
    "rect_extents",
    "binarize",
    "read_frame_png",
    "write_frame_png",
    "read_id_mask_png",
    "write_id_mask_png",
    "davis_palette",
]


def round_half_up(v):
    """Round to nearest integer with ties going up (floor(v + 0.5))."""
    return int(math.floor(v + 0.5))


def check_frame(frame):
    a = np.asarray(frame)
    if a.ndim != 3 or a.shape[2] != 3 or a.dtype != np.uint8:
        raise ContractError(f"expected (H, W, 3) uint8 frame, got {a.shape} {a.dtype}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise GeometryError("frame must be at least 1x1")
    return a


def check_mask(mask):
    a = np.asarray(mask)
    if a.ndim != 2:
        raise ContractError(f"expected (H, W) mask, got shape {a.shape}")
    if a.dtype != np.uint8:
        a = a.astype(np.uint8)
    if a.max(initial=0) > 1:
        raise ContractError("mask values must be in {0, 1}")
    return a


def check_probmap(pm):
    a = np.asarray(pm, dtype=np.float64)
    if a.ndim != 2:
        raise ContractError(f"expected (H, W) probability map, got shape {a.shape}")
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise ContractError("probability values must lie in [0, 1]")
    return a


@dataclass(frozen=True)
class BoundingBox:
    """Center/size rectangle in frame coordinates."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise GeometryError(f"degenerate box w={self.w}, h={self.h}")

    def scaled(self, k):
        return BoundingBox(self.cx, self.cy, self.w * k, self.h * k)


@dataclass(frozen=True)
class Placement:
    """Where a crop sits in its source frame, including out-of-frame padding.

    ``origin_x/origin_y`` are the clamped top-left of the in-frame part;
    the unclamped crop origin is ``origin - pad_left/pad_top``.
    """

    origin_x: int
    origin_y: int
    crop_w: int
    crop_h: int
    pad_left: int = 0
    pad_top: int = 0
    pad_right: int = 0
    pad_bottom: int = 0

    @property
    def in_w(self):
        return self.crop_w - self.pad_left - self.pad_right

    @property
    def in_h(self):
        return self.crop_h - self.pad_top - self.pad_bottom

    @property
    def desired_x(self):
        """Unclamped crop origin (frame coords, may be negative)."""
        return self.origin_x - self.pad_left

    @property
    def desired_y(self):
        return self.origin_y - self.pad_top


@dataclass(frozen=True)
class SearchingArea:
    """Cropped patch plus the placement record needed for exact compositing."""

    patch: np.ndarray
    placement: Placement
    source_bbox: BoundingBox
    k: float


class TemplateMode(Enum):
    BBOX_CHANNEL = 1
    IMAGE_CROP = 2
    CROP_WITH_MASK = 3


@dataclass(frozen=True)
class Template:
    """Target-conditioning payload handed to a segmenter at init time."""

    mode: TemplateMode
    bbox: BoundingBox
    crop: np.ndarray | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.mode is TemplateMode.BBOX_CHANNEL:
            if self.crop is not None or self.mask is not None:
                raise ContractError("BBOX_CHANNEL template carries only a bbox")
        elif self.mode is TemplateMode.IMAGE_CROP:
            if self.crop is None:
                raise ContractError("IMAGE_CROP template requires a crop")
        elif self.mode is TemplateMode.CROP_WITH_MASK:
            if self.crop is None or self.mask is None:
                raise ContractError("CROP_WITH_MASK template requires crop and mask")
            if self.crop.shape[:2] != self.mask.shape:
                raise ContractError("template crop and mask dimensions differ")


@dataclass
class Sequence:
    """A named frame sequence with per-object ground-truth masks.

    ``gt_masks[obj_id][t]`` is a full-frame {0,1} mask; an absent object is
    an all-zero mask.  Enclosing boxes are derived lazily (None where the
    mask is empty).
    """

    name: str
    frames: list
    gt_masks: dict
    _gt_boxes: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.frames:
            raise ContractError(f"sequence {self.name!r}: no frames")
        shape = self.frames[0].shape
        for i, f in enumerate(self.frames):
            check_frame(f)
            if f.shape != shape:
                raise ContractError(f"sequence {self.name!r}: frame {i} dims differ")
        h, w = shape[:2]
        for obj, masks in self.gt_masks.items():
            if len(masks) != len(self.frames):
                raise ContractError(
                    f"sequence {self.name!r} object {obj}: "
                    f"{len(masks)} masks for {len(self.frames)} frames"
                )
            for i, m in enumerate(masks):
                m = check_mask(m)
                if m.shape != (h, w):
                    raise ContractError(
                        f"sequence {self.name!r} object {obj}: mask {i} dims differ"
                    )
                masks[i] = m

    @property
    def width(self):
        return self.frames[0].shape[1]

    @property
    def height(self):
        return self.frames[0].shape[0]

    def __len__(self):
        return len(self.frames)

    @property
    def object_ids(self):
        return sorted(self.gt_masks)

    def gt_boxes(self, obj_id):
        """Enclosing boxes for one object; None where the mask is empty."""
        if obj_id not in self._gt_boxes:
            boxes = []
            for m in self.gt_masks[obj_id]:
                boxes.append(enclosing_bbox(m) if m.any() else None)
            self._gt_boxes[obj_id] = boxes
        return self._gt_boxes[obj_id]


def _crop_geometry(cx, cy, cw, ch, W, H):
    x0 = round_half_up(cx - cw / 2.0)
    y0 = round_half_up(cy - ch / 2.0)
    pad_left = max(0, -x0)
    pad_top = max(0, -y0)
    pad_right = max(0, x0 + cw - W)
    pad_bottom = max(0, y0 + ch - H)
    in_w = max(0, cw - pad_left - pad_right)
    in_h = max(0, ch - pad_top - pad_bottom)
    if in_w == 0:
        pad_right = cw - pad_left
    if in_h == 0:
        pad_bottom = ch - pad_top
    return Placement(
        origin_x=min(max(x0, 0), W),
        origin_y=min(max(y0, 0), H),
        crop_w=cw,
        crop_h=ch,
        pad_left=pad_left,
        pad_top=pad_top,
        pad_right=pad_right,
        pad_bottom=pad_bottom,
    )


def crop_searching_area(frame, bbox, k):
    """Crop a k-scaled patch centered on ``bbox``.

    Out-of-frame pixels are filled with the per-channel frame mean; the
    returned Placement makes the later paste exact.
    """
    frame = check_frame(frame)
    if k < 1:
        raise ParameterError(f"searching-area factor must be >= 1, got {k}")
    cw = round_half_up(k * bbox.w)
    ch = round_half_up(k * bbox.h)
    if cw <= 0 or ch <= 0:
        raise GeometryError(f"crop of size {cw}x{ch} is degenerate")
    H, W = frame.shape[:2]
    pl = _crop_geometry(bbox.cx, bbox.cy, cw, ch, W, H)
    fill = np.round(frame.reshape(-1, 3).mean(axis=0)).astype(np.uint8)
    patch = np.empty((ch, cw, 3), dtype=np.uint8)
    patch[:, :] = fill
    if pl.in_w > 0 and pl.in_h > 0:
        patch[pl.pad_top : pl.pad_top + pl.in_h, pl.pad_left : pl.pad_left + pl.in_w] = frame[
            pl.origin_y : pl.origin_y + pl.in_h, pl.origin_x : pl.origin_x + pl.in_w
        ]
    return SearchingArea(patch=patch, placement=pl, source_bbox=bbox, k=float(k))


def crop_mask(mask, placement):
    """Extract the crop region of a full-frame mask; padded area is 0."""
    mask = check_mask(mask)
    pl = placement
    out = np.zeros((pl.crop_h, pl.crop_w), dtype=np.uint8)
    if pl.in_w > 0 and pl.in_h > 0:
        out[pl.pad_top : pl.pad_top + pl.in_h, pl.pad_left : pl.pad_left + pl.in_w] = mask[
            pl.origin_y : pl.origin_y + pl.in_h, pl.origin_x : pl.origin_x + pl.in_w
        ]
    return out


def paste_map(pm, placement, W, H):
    """Place a crop-sized map into a WxH zero map; padded columns/rows drop."""
    pm = check_probmap(pm)
    pl = placement
    if pm.shape != (pl.crop_h, pl.crop_w):
        raise ContractError(
            f"map shape {pm.shape} does not match crop {pl.crop_h}x{pl.crop_w}"
        )
    out = np.zeros((H, W), dtype=np.float64)
    if pl.in_w > 0 and pl.in_h > 0:
        out[pl.origin_y : pl.origin_y + pl.in_h, pl.origin_x : pl.origin_x + pl.in_w] = pm[
            pl.pad_top : pl.pad_top + pl.in_h, pl.pad_left : pl.pad_left + pl.in_w
        ]
    return out


def enclosing_bbox(mask):
    """Tightest axis-aligned box around the positive pixels (inclusive)."""
    mask = check_mask(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise EmptyTargetError("mask has no positive pixels")
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return BoundingBox(
        cx=(x0 + x1) / 2.0,
        cy=(y0 + y1) / 2.0,
        w=float(x1 - x0 + 1),
        h=float(y1 - y0 + 1),
    )


def rect_extents(bbox):
    """Integer pixel extents of a box: (x0, y0, w, h), same rounding as crops."""
    iw = round_half_up(bbox.w)
    ih = round_half_up(bbox.h)
    x0 = round_half_up(bbox.cx - iw / 2.0)
    y0 = round_half_up(bbox.cy - ih / 2.0)
    return x0, y0, iw, ih


def rect_to_mask(bbox, W, H):
    """Rasterize a box: ones on its pixel extent clipped to the frame."""
    x0, y0, iw, ih = rect_extents(bbox)
    out = np.zeros((H, W), dtype=np.uint8)
    xa, xb = max(0, x0), min(W, x0 + iw)
    ya, yb = max(0, y0), min(H, y0 + ih)
    if xa < xb and ya < yb:
        out[ya:yb, xa:xb] = 1
    return out


def binarize(pm, tau):
    """Threshold a probability map with strict >."""
    if not (0.0 <= tau <= 1.0):
        raise ParameterError(f"threshold must be in [0, 1], got {tau}")
    pm = check_probmap(pm)
    return (pm > tau).astype(np.uint8)


# ---------------------------------------------------------------------------
# PNG I/O (frames as RGB, annotation masks as palette PNGs, DAVIS-style:
# palette index = object id).


def read_frame_png(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_frame_png(path, frame):
    Image.fromarray(check_frame(frame), mode="RGB").save(path, format="PNG")


def read_id_mask_png(path):
    """Read an annotation image as an (H, W) object-id array."""
    with Image.open(path) as im:
        if im.mode == "P":
            return np.asarray(im, dtype=np.int32)
        if im.mode in ("L", "I", "I;16"):
            return np.asarray(im.convert("I"), dtype=np.int32)
        # RGB annotation: treat any non-black pixel as object 1
        rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
        return (rgb.sum(axis=2) > 0).astype(np.int32)


def davis_palette():
    """The standard 256-color VOC/DAVIS palette as a flat list of ints."""
    pal = np.zeros((256, 3), dtype=np.uint8)
    for i in range(256):
        r = g = b = 0
        c = i
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        pal[i] = (r, g, b)
    return pal.flatten().tolist()


def write_id_mask_png(path, ids):
    ids = np.asarray(ids)
    if ids.min(initial=0) < 0 or ids.max(initial=0) > 255:
        raise ContractError("object ids must fit in a palette index (0..255)")
    im = Image.fromarray(ids.astype(np.uint8), mode="P")
    im.putpalette(davis_palette())
    im.save(path, format="PNG")
