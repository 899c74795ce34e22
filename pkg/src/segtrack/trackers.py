"""Bounding-box trackers: the abstraction plus classical reference
implementations (static, ground-truth oracle, exhaustive NCC, and a
raw-pixel KCF built on FFT correlation).

All trackers report the init box's width/height unchanged; only the
center moves.  Trajectories are deterministic for a fixed sequence.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .core import BoundingBox, check_frame, crop_searching_area, rect_extents
from .errors import ContractError, GeometryError, ParameterError, UsageError

__all__ = [
    "Tracker",
    "StaticTracker",
    "OracleTracker",
    "NccTracker",
    "KcfTracker",
    "kernel_correlation",
    "luma",
]


def luma(frame):
    """ITU-R 601 grayscale, float64 in [0, 255]."""
    f = frame.astype(np.float64)
    return 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]


class Tracker:
    """Base tracker: init once with (frame, bbox), then update per frame."""

    def __init__(self):
        self._initialized = False
        self.last_bbox = None

    def init(self, frame, bbox):
        if self._initialized:
            raise UsageError("tracker already initialized")
        frame = check_frame(frame)
        H, W = frame.shape[:2]
        x0, y0, iw, ih = rect_extents(bbox)
        if x0 + iw <= 0 or y0 + ih <= 0 or x0 >= W or y0 >= H:
            raise GeometryError("init bbox lies outside the frame")
        self._init_impl(frame, bbox)
        self._initialized = True
        self.last_bbox = bbox

    def update(self, frame):
        if not self._initialized:
            raise UsageError("tracker.update before init")
        frame = check_frame(frame)
        bbox = self._update_impl(frame)
        self.last_bbox = bbox
        return bbox

    def _init_impl(self, frame, bbox):
        raise NotImplementedError

    def _update_impl(self, frame):
        raise NotImplementedError


class StaticTracker(Tracker):
    """Always returns the init box; the no-motion baseline."""

    def _init_impl(self, frame, bbox):
        self._bbox = bbox

    def _update_impl(self, frame):
        return self._bbox


class OracleTracker(Tracker):
    """Feeds back the ground-truth enclosing box at every step.

    Takes the per-frame GT box list (entry t for frame t; None where the
    object is absent, in which case the last known box is repeated so a box
    is always emitted).  Declares explicit GT access.
    """

    def __init__(self, gt_boxes):
        super().__init__()
        self._boxes = list(gt_boxes)
        self._t = 0

    def _init_impl(self, frame, bbox):
        self._t = 1

    def _update_impl(self, frame):
        if self._t >= len(self._boxes):
            raise UsageError("OracleTracker ran past its ground-truth feed")
        b = self._boxes[self._t]
        self._t += 1
        return b if b is not None else self.last_bbox


class NccTracker(Tracker):
    """Exhaustive normalized cross-correlation over a +-search_radius window.

    Template is the grayscale init-box crop at native resolution; fixed
    scale, no model update.
    """

    def __init__(self, search_radius=16):
        super().__init__()
        if search_radius < 1:
            raise ParameterError("search_radius must be >= 1")
        self.radius = int(search_radius)

    def _init_impl(self, frame, bbox):
        x0, y0, iw, ih = rect_extents(bbox)
        sa = crop_searching_area(
            frame, BoundingBox(x0 + (iw - 1) / 2.0, y0 + (ih - 1) / 2.0, iw, ih), 1.0
        )
        t = luma(sa.patch)
        self._template = t - t.mean()
        self._tnorm = np.sqrt((self._template**2).sum())
        self._cx = bbox.cx
        self._cy = bbox.cy
        self._w = bbox.w
        self._h = bbox.h
        self._tw = iw
        self._th = ih

    def _update_impl(self, frame):
        r = self.radius
        sa = crop_searching_area(
            frame,
            BoundingBox(self._cx, self._cy, self._tw + 2 * r, self._th + 2 * r),
            1.0,
        )
        g = luma(sa.patch)
        windows = np.lib.stride_tricks.sliding_window_view(g, (self._th, self._tw))
        wm = windows.mean(axis=(2, 3), keepdims=True)
        wz = windows - wm
        num = np.einsum("ijkl,kl->ij", wz, self._template)
        den = self._tnorm * np.sqrt((wz**2).sum(axis=(2, 3)))
        score = np.where(den > 0, num / np.maximum(den, 1e-12), 0.0)
        iy, ix = np.unravel_index(np.argmax(score), score.shape)
        # window (iy, ix) has its center at offset (iy - r, ix - r) from the
        # previous center (the searching patch adds exactly r on each side)
        self._cx = self._cx + (ix - (score.shape[1] - 1) / 2.0)
        self._cy = self._cy + (iy - (score.shape[0] - 1) / 2.0)
        return BoundingBox(self._cx, self._cy, self._w, self._h)


def kernel_correlation(x, z, sigma):
    """Gaussian kernel values between x and all cyclic shifts of z.

    Entry (dy, dx) is exp(-||x - roll(z, -(dy, dx))||^2 / (sigma^2 * n)):
    for z = roll(x, s) the maximum sits at s.  Computed via FFT; matches
    the direct spatial evaluation to rounding error.
    """
    if sigma <= 0:
        raise ParameterError(f"kernel bandwidth must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ContractError(f"patch shapes differ: {x.shape} vs {z.shape}")
    cross = np.real(np.fft.ifft2(np.conj(np.fft.fft2(x)) * np.fft.fft2(z)))
    d = (x * x).sum() + (z * z).sum() - 2.0 * cross
    return np.exp(-np.maximum(d, 0.0) / (sigma * sigma * x.size))


class KcfModel:
    """Learned KCF state: dual coefficients and appearance, both updated by
    linear interpolation at rate eta (first train uses eta = 1)."""

    def __init__(self, yf, params):
        self.yf = yf
        self.params = params
        self.x = None  # spatial appearance (windowed features)
        self.alphaf = None  # dual ridge-regression coefficients, spectrum

    def train(self, feat, eta=None):
        if self.x is not None and feat.shape != self.x.shape:
            raise ContractError("training patch dims differ from model dims")
        p = self.params
        k = kernel_correlation(feat, feat, p["sigma"])
        alphaf = self.yf / (np.fft.fft2(k) + p["lambda"])
        if self.x is None:
            self.x = feat
            self.alphaf = alphaf
        else:
            e = p["eta"] if eta is None else eta
            self.x = (1 - e) * self.x + e * feat
            self.alphaf = (1 - e) * self.alphaf + e * alphaf

    def response(self, feat):
        """Detection map for a candidate patch; real up to FFT rounding."""
        if self.x is None:
            raise UsageError("KCF model used before training")
        k = kernel_correlation(self.x, feat, self.params["sigma"])
        return np.real(np.fft.ifft2(np.fft.fft2(k) * self.alphaf))


class KcfTracker(Tracker):
    """Kernelized correlation filter on windowed grayscale raw pixels.

    The searching window is the target enlarged by (1 + padding), resampled
    to a fixed working resolution.  Translation only; the box size stays at
    its init value.
    """

    def __init__(
        self,
        lambda_=1e-4,
        sigma=0.5,
        eta=0.02,
        padding=1.5,
        out_sigma_factor=0.1,
        resolution=64,
    ):
        super().__init__()
        if lambda_ <= 0:
            raise ParameterError("lambda must be positive")
        if not (0 < eta <= 1):
            raise ParameterError("eta must be in (0, 1]")
        if sigma <= 0:
            raise ParameterError("sigma must be positive")
        self.params = {
            "lambda": float(lambda_),
            "sigma": float(sigma),
            "eta": float(eta),
            "padding": float(padding),
            "out_sigma_factor": float(out_sigma_factor),
        }
        self.res = int(resolution)
        n = self.res
        self._window = np.outer(np.hanning(n), np.hanning(n))
        # Gaussian regression target peaked at zero shift (wrapped)
        target_side = n / (1.0 + self.params["padding"])
        out_sigma = target_side * self.params["out_sigma_factor"]
        g = np.arange(n) - n // 2
        yy, xx = np.meshgrid(g, g, indexing="ij")
        y = np.exp(-0.5 * (yy**2 + xx**2) / out_sigma**2)
        y = np.roll(y, (-(n // 2), -(n // 2)), axis=(0, 1))
        self._yf = np.fft.fft2(y)

    def _features(self, frame, cx, cy):
        sa = crop_searching_area(
            frame, BoundingBox(cx, cy, self._win_w, self._win_h), 1.0
        )
        im = Image.fromarray(sa.patch, mode="RGB").resize(
            (self.res, self.res), Image.BILINEAR
        )
        g = luma(np.asarray(im, dtype=np.uint8)) / 255.0
        g = g - g.mean()
        return g * self._window

    def _init_impl(self, frame, bbox):
        self._w = bbox.w
        self._h = bbox.h
        self._cx = bbox.cx
        self._cy = bbox.cy
        scale = 1.0 + self.params["padding"]
        self._win_w = max(1.0, bbox.w * scale)
        self._win_h = max(1.0, bbox.h * scale)
        self.model = KcfModel(self._yf, self.params)
        self.model.train(self._features(frame, self._cx, self._cy), eta=1.0)

    def _update_impl(self, frame):
        feat = self._features(frame, self._cx, self._cy)
        resp = self.model.response(feat)
        iy, ix = np.unravel_index(np.argmax(resp), resp.shape)
        n = self.res
        dy = iy - n if iy > n // 2 else iy
        dx = ix - n if ix > n // 2 else ix
        self._cx += dx * self._win_w / n
        self._cy += dy * self._win_h / n
        self.model.train(self._features(frame, self._cx, self._cy))
        return BoundingBox(self._cx, self._cy, self._w, self._h)
