"""Target-conditioned segmenters: rectangular fill, color-histogram Bayes,
ground-truth oracle, and the wire-protocol client for external processes.

A segmenter declares its template mode and is conditioned once via
``init(template)`` (a no-op for bbox-channel segmenters, whose template is
re-derived per frame from the tracker box), then maps each searching area
to a probability map of the same size.
"""

from __future__ import annotations

import shlex
import socket
import subprocess

import numpy as np
from PIL import Image
from scipy import ndimage

from . import protocol
from .core import (
    SearchingArea,
    Template,
    TemplateMode,
    check_mask,
    check_probmap,
    rect_extents,
)
from .errors import ContractError, ParameterError, TransportError, UsageError

__all__ = [
    "Segmenter",
    "RectFillSegmenter",
    "OracleSegmenter",
    "ColorBayesSegmenter",
    "ColorModel",
    "color_posterior",
    "ExternalSegmenter",
]


class Segmenter:
    """Base segmenter.  Subclasses set ``template_mode`` and optionally
    ``template_context_factor`` (how much context around the GT box the
    template crop should include)."""

    template_mode = TemplateMode.BBOX_CHANNEL
    template_context_factor = 1.0
    #: excluded from benchmark leaderboards unless explicitly allowed
    uses_ground_truth = False

    def __init__(self):
        self._initialized = False

    def init(self, template: Template):
        if template.mode is not self.template_mode:
            raise ContractError(
                f"{type(self).__name__} expects {self.template_mode.name} "
                f"templates, got {template.mode.name}"
            )
        self._init_impl(template)
        self._initialized = True

    def segment(self, sa: SearchingArea):
        if not self._initialized and self.template_mode is not TemplateMode.BBOX_CHANNEL:
            raise UsageError("segmenter.segment before init")
        pm = self._segment_impl(sa)
        return check_probmap(pm)

    def close(self):
        pass

    def _init_impl(self, template):
        pass

    def _segment_impl(self, sa):
        raise NotImplementedError


def bbox_rect_in_patch(sa: SearchingArea):
    """Pixel extent of the tracker box inside the patch, clipped to it.

    Uses the same rounding as the full-frame rasterization so that pasting
    the filled rectangle back reproduces ``rect_to_mask`` exactly.
    """
    x0, y0, iw, ih = rect_extents(sa.source_bbox)
    px = x0 - sa.placement.desired_x
    py = y0 - sa.placement.desired_y
    xa, ya = max(0, px), max(0, py)
    xb = min(sa.placement.crop_w, px + iw)
    yb = min(sa.placement.crop_h, py + ih)
    return xa, ya, xb, yb


class RectFillSegmenter(Segmenter):
    """The rectangular-mask baseline: ones on the tracker-box region of the
    searching area, zeros on the context ring."""

    template_mode = TemplateMode.BBOX_CHANNEL

    def _segment_impl(self, sa):
        out = np.zeros((sa.placement.crop_h, sa.placement.crop_w), dtype=np.float64)
        xa, ya, xb, yb = bbox_rect_in_patch(sa)
        if xa < xb and ya < yb:
            out[ya:yb, xa:xb] = 1.0
        return out


class OracleSegmenter(Segmenter):
    """Returns the ground-truth mask restricted to the searching area.

    Exists for testing and ceiling analysis; declares explicit GT access
    and keeps a frame cursor starting at 1 (frame 0 is initialization).
    """

    template_mode = TemplateMode.CROP_WITH_MASK
    uses_ground_truth = True

    def __init__(self, gt_masks):
        super().__init__()
        self._gt = [check_mask(m) for m in gt_masks]
        self._t = 1

    def _segment_impl(self, sa):
        if self._t >= len(self._gt):
            raise UsageError("OracleSegmenter ran past its ground-truth feed")
        gt = self._gt[self._t]
        self._t += 1
        pl = sa.placement
        out = np.zeros((pl.crop_h, pl.crop_w), dtype=np.float64)
        if pl.in_w > 0 and pl.in_h > 0:
            out[pl.pad_top : pl.pad_top + pl.in_h, pl.pad_left : pl.pad_left + pl.in_w] = gt[
                pl.origin_y : pl.origin_y + pl.in_h, pl.origin_x : pl.origin_x + pl.in_w
            ]
        return out


class ColorModel:
    """Smoothed 3-D color histograms for foreground and background plus a
    foreground prior; both histograms sum to 1."""

    def __init__(self, fg_hist, bg_hist, prior, bins):
        self.fg_hist = fg_hist
        self.bg_hist = bg_hist
        self.prior = float(prior)
        self.bins = int(bins)

    @classmethod
    def fit(cls, pixels_fg, pixels_bg, prior, bins=16, eps=1e-6):
        def hist(px):
            h = np.full((bins,) * 3, eps, dtype=np.float64)
            if len(px):
                idx = (px.astype(np.int64) * bins) // 256
                np.add.at(h, (idx[:, 0], idx[:, 1], idx[:, 2]), 1.0)
            return h / h.sum()

        return cls(hist(pixels_fg), hist(pixels_bg), prior, bins)

    def bin_index(self, pixels):
        idx = (pixels.astype(np.int64) * self.bins) // 256
        return idx[..., 0], idx[..., 1], idx[..., 2]


def color_posterior(model: ColorModel, pixel):
    """P(fg | color) by Bayes rule with the model's prior."""
    px = np.asarray(pixel, dtype=np.uint8).reshape(1, 3)
    i = model.bin_index(px)
    pf = model.fg_hist[i][0]
    pb = model.bg_hist[i][0]
    pi = model.prior
    return float(pf * pi / (pf * pi + pb * (1.0 - pi)))


class ColorBayesSegmenter(Segmenter):
    """Classical foreground/background color-histogram segmentation.

    The template crop is taken with a 1.5x context ring; foreground pixels
    come from the template mask, background from the rest of the crop.  The
    prior is the foreground fraction of the crop at init.  Optionally keeps
    only the largest connected component of the >0.5 region.
    """

    template_mode = TemplateMode.CROP_WITH_MASK
    template_context_factor = 1.5

    def __init__(self, bins=16, eps=1e-6, keep_largest_component=True):
        super().__init__()
        if bins < 1 or bins > 256:
            raise ParameterError("bins must be in 1..256")
        self.bins = int(bins)
        self.eps = float(eps)
        self.keep_largest_component = keep_largest_component
        self.model = None

    def _init_impl(self, template):
        crop = template.crop
        mask = check_mask(template.mask)
        px = crop.reshape(-1, 3)
        fg = px[mask.reshape(-1) == 1]
        bg = px[mask.reshape(-1) == 0]
        prior = len(fg) / max(1, len(px))
        prior = min(max(prior, 1e-3), 1.0 - 1e-3)
        self.model = ColorModel.fit(fg, bg, prior, bins=self.bins, eps=self.eps)

    def _segment_impl(self, sa):
        m = self.model
        i = m.bin_index(sa.patch)
        pf = m.fg_hist[i]
        pb = m.bg_hist[i]
        post = pf * m.prior / (pf * m.prior + pb * (1.0 - m.prior))
        if self.keep_largest_component:
            post = _largest_component_filter(post)
        return post


def _largest_component_filter(pm, tau=0.5):
    """Zero out >tau pixels that are not in the largest 8-connected blob."""
    fg = pm > tau
    if not fg.any():
        return pm
    labels, n = ndimage.label(fg, structure=np.ones((3, 3), dtype=int))
    if n <= 1:
        return pm
    sizes = ndimage.sum_labels(fg, labels, index=np.arange(1, n + 1))
    keep = int(np.argmax(sizes)) + 1
    out = pm.copy()
    out[fg & (labels != keep)] = 0.0
    return out


def _resize_frame(frame, size_wh):
    im = Image.fromarray(frame, mode="RGB").resize(size_wh, Image.BILINEAR)
    return np.asarray(im, dtype=np.uint8)


def _resize_map(pm, size_wh):
    im = Image.fromarray(pm.astype(np.float32), mode="F").resize(size_wh, Image.BILINEAR)
    return np.asarray(im, dtype=np.float64)


class ExternalSegmenter(Segmenter):
    """Client for a segmentation peer speaking the STSG wire protocol.

    ``endpoint`` is either ``cmd:<shell-ish command line>`` (child process
    over pipes) or ``tcp:<host>:<port>``.  One request per segment() call,
    strictly ordered; peer failure raises TransportError, never returns a
    silent empty mask.  ``input_resolution`` (W, H) enables bilinear resize
    on send and back-resize of the returned map.
    """

    def __init__(self, endpoint, template_mode=TemplateMode.BBOX_CHANNEL,
                 input_resolution=None, template_context_factor=1.0):
        super().__init__()
        self.template_mode = template_mode
        self.template_context_factor = template_context_factor
        self.input_resolution = input_resolution
        self._proc = None
        self._sock = None
        if endpoint.startswith("cmd:"):
            argv = shlex.split(endpoint[4:])
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
            self._w = self._proc.stdin
            self._r = self._proc.stdout
        elif endpoint.startswith("tcp:"):
            host, _, port = endpoint[4:].rpartition(":")
            self._sock = socket.create_connection((host, int(port)))
            self._w = self._sock.makefile("wb")
            self._r = self._sock.makefile("rb")
        else:
            raise ParameterError(
                f"endpoint must start with 'cmd:' or 'tcp:', got {endpoint!r}"
            )

    def _send(self, data):
        try:
            self._w.write(data)
            self._w.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"peer connection lost: {exc}") from exc

    def _init_impl(self, template):
        crop = template.crop
        mask = template.mask
        bbox = template.bbox
        if crop is not None and self.input_resolution is not None:
            sy = self.input_resolution[1] / crop.shape[0]
            sx = self.input_resolution[0] / crop.shape[1]
            crop = _resize_frame(crop, self.input_resolution)
            if mask is not None:
                mask = (
                    _resize_map(mask.astype(np.float64), self.input_resolution) > 0.5
                ).astype(np.uint8)
            bbox_t = (bbox.cx * sx, bbox.cy * sy, bbox.w * sx, bbox.h * sy)
        else:
            bbox_t = (bbox.cx, bbox.cy, bbox.w, bbox.h)
        self._send(
            protocol.encode_init(template.mode.value, bbox_t, crop=crop, mask=mask)
        )

    def _segment_impl(self, sa):
        patch = sa.patch
        xa, ya, xb, yb = bbox_rect_in_patch(sa)
        bbox_p = ((xa + xb) / 2.0, (ya + yb) / 2.0, max(1.0, xb - xa), max(1.0, yb - ya))
        orig_wh = (patch.shape[1], patch.shape[0])
        if self.input_resolution is not None:
            sx = self.input_resolution[0] / patch.shape[1]
            sy = self.input_resolution[1] / patch.shape[0]
            patch = _resize_frame(patch, self.input_resolution)
            bbox_p = (bbox_p[0] * sx, bbox_p[1] * sy, bbox_p[2] * sx, bbox_p[3] * sy)
        self._send(protocol.encode_segment(patch, bbox_p))
        ftype, payload = protocol.read_frame(self._r)
        if ftype == protocol.TYPE_ERROR:
            raise TransportError(f"peer error: {payload.decode('utf-8', 'replace')}")
        if ftype != protocol.TYPE_RESULT:
            raise TransportError(f"unexpected frame type 0x{ftype:02x} from peer")
        pm = protocol.decode_result(payload)
        if self.input_resolution is not None:
            pm = _resize_map(pm, orig_wh)
        return np.clip(pm, 0.0, 1.0)

    def close(self):
        try:
            self._send(protocol.encode_shutdown())
        except TransportError:
            pass
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.wait(timeout=10)
            self._proc = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None
