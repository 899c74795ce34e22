"""Segmentation backends.

The shipped backend is deliberately non-neural so the server runs with no
model weights: probability is a logistic of the RGB distance to a reference
color taken from the template (or, with a bbox-only template, from the box
interior of each incoming patch).  All arithmetic is float32 end to end so
repeated runs are byte-identical.

Custom backends register through :func:`register_backend`; a backend is a
class with ``prepare(mode, bbox, crop, mask)`` and
``segment(patch, bbox) -> float32 (H, W) array``.
"""

from __future__ import annotations

import math

import numpy as np

MODE_BBOX = 1
MODE_CROP = 2
MODE_CROP_MASK = 3


class BackendError(Exception):
    """A request the backend cannot serve (reported to the peer as ERROR)."""


def _rhu(v):
    return int(math.floor(v + 0.5))


def _rect_slices(bbox, w, h):
    """Integer row/col slices of a (cx, cy, bw, bh) box, clipped to w x h."""
    cx, cy, bw, bh = bbox
    iw = max(1, _rhu(bw))
    ih = max(1, _rhu(bh))
    x0 = _rhu(cx - iw / 2.0)
    y0 = _rhu(cy - ih / 2.0)
    xa, xb = max(0, x0), min(w, x0 + iw)
    ya, yb = max(0, y0), min(h, y0 + ih)
    if xa >= xb or ya >= yb:
        raise BackendError("bbox lies outside the patch")
    return slice(ya, yb), slice(xa, xb)


def logistic_map(patch, reference, midpoint, scale):
    """Per-pixel logistic of the Euclidean RGB distance to ``reference``."""
    diff = patch.astype(np.float32) - reference.astype(np.float32)
    dist = np.sqrt(np.sum(diff * diff, axis=-1, dtype=np.float32))
    z = (dist - np.float32(midpoint)) / np.float32(scale)
    return (np.float32(1.0) / (np.float32(1.0) + np.exp(z))).astype(np.float32)


class ThresholdBackend:
    """Distance-to-template-mean color, mapped through a logistic."""

    def __init__(self, midpoint=60.0, scale=20.0):
        self.midpoint = float(midpoint)
        self.scale = float(scale)
        self._reference = None
        self._mode = None

    def prepare(self, mode, bbox, crop, mask):
        self._mode = mode
        if mode == MODE_BBOX:
            self._reference = None  # derived per patch from the request bbox
            return
        h, w = crop.shape[:2]
        if mode == MODE_CROP_MASK:
            sel = mask.astype(bool)
            if not sel.any():
                raise BackendError("template mask is empty")
            pixels = crop[sel]
        else:
            ys, xs = _rect_slices(bbox, w, h)
            pixels = crop[ys, xs].reshape(-1, 3)
        self._reference = pixels.astype(np.float32).mean(axis=0, dtype=np.float32)

    def segment(self, patch, bbox):
        if self._mode is None:
            raise BackendError("not initialized")
        reference = self._reference
        if reference is None:
            h, w = patch.shape[:2]
            ys, xs = _rect_slices(bbox, w, h)
            reference = (
                patch[ys, xs].reshape(-1, 3).astype(np.float32)
                .mean(axis=0, dtype=np.float32)
            )
        return logistic_map(patch, reference, self.midpoint, self.scale)


BACKENDS = {"threshold": ThresholdBackend}


def register_backend(name, factory):
    """Plugin hook: make ``factory()`` available as ``--backend name``."""
    BACKENDS[name] = factory


def make_backend(name):
    if name not in BACKENDS:
        raise KeyError(f"unknown backend {name!r}; have {sorted(BACKENDS)}")
    return BACKENDS[name]()
