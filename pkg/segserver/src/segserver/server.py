"""Protocol loop: one session, serial request handling.

The server never raises on peer input: malformed payloads get an ERROR
frame and the loop continues, an unframeable byte stream gets one ERROR and
a clean close (there is no way to resynchronize), and a vanished peer ends
the loop with a diagnostic.
"""

from __future__ import annotations

import struct
import sys

import numpy as np

from . import protocol
from .backends import BackendError, make_backend

_INIT_HEAD = struct.Struct("<B4f")
_DIMS = struct.Struct("<II")
_BBOX = struct.Struct("<4f")


class MalformedPayload(Exception):
    pass


def parse_init(payload):
    if len(payload) < _INIT_HEAD.size + _DIMS.size:
        raise MalformedPayload("INIT payload too short")
    mode, cx, cy, bw, bh = _INIT_HEAD.unpack_from(payload)
    if mode not in (1, 2, 3):
        raise MalformedPayload(f"unknown template mode {mode}")
    w, h = _DIMS.unpack_from(payload, _INIT_HEAD.size)
    off = _INIT_HEAD.size + _DIMS.size
    crop = mask = None
    if mode >= 2:
        if w == 0 or h == 0:
            raise MalformedPayload("INIT with a crop needs nonzero dimensions")
        need = off + 3 * w * h + (w * h if mode == 3 else 0)
        if len(payload) != need:
            raise MalformedPayload(
                f"INIT payload length {len(payload)} != expected {need}"
            )
        crop = np.frombuffer(payload, np.uint8, 3 * w * h, off).reshape(h, w, 3)
        if mode == 3:
            mask = np.frombuffer(payload, np.uint8, w * h, off + 3 * w * h)
            mask = mask.reshape(h, w)
    elif len(payload) != off:
        raise MalformedPayload("INIT payload has trailing bytes")
    return mode, (cx, cy, bw, bh), crop, mask


def parse_segment(payload):
    if len(payload) < _DIMS.size + _BBOX.size:
        raise MalformedPayload("SEGMENT payload too short")
    w, h = _DIMS.unpack_from(payload)
    need = _DIMS.size + 3 * w * h + _BBOX.size
    if w == 0 or h == 0 or len(payload) != need:
        raise MalformedPayload(
            f"SEGMENT payload length {len(payload)} != expected {need}"
        )
    patch = np.frombuffer(payload, np.uint8, 3 * w * h, _DIMS.size).reshape(h, w, 3)
    bbox = _BBOX.unpack_from(payload, _DIMS.size + 3 * w * h)
    return patch, bbox


def resize_bilinear(img, out_w, out_h):
    """Plain bilinear resample (align-corners=False, edge clamped)."""
    h, w = img.shape[:2]
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    tail = (1,) * (img.ndim - 2)
    fx = np.clip(xs - x0, 0.0, 1.0).reshape((1, out_w) + tail)
    fy = np.clip(ys - y0, 0.0, 1.0).reshape((out_h, 1) + tail)
    arr = img.astype(np.float64)
    top = arr[y0[:, None], x0] * (1 - fx) + arr[y0[:, None], x1] * fx
    bot = arr[y1[:, None], x0] * (1 - fx) + arr[y1[:, None], x1] * fx
    return top * (1 - fy) + bot * fy


def encode_result(pm):
    h, w = pm.shape
    body = _DIMS.pack(w, h) + np.ascontiguousarray(pm, np.float32).tobytes()
    return body


def serve(reader, writer, backend_name="threshold", input_resolution=None,
          log=None):
    """Run one session until SHUTDOWN or EOF.  Returns a diagnostic string."""
    log = log or (lambda msg: None)
    backend = make_backend(backend_name)
    initialized = False
    try:
        while True:
            try:
                ftype, payload = protocol.read_frame(reader)
            except protocol.FramingError as exc:
                protocol.write_error(writer, f"framing: {exc}")
                return f"closed: unframeable input ({exc})"
            except protocol.PeerClosed as exc:
                if exc.mid_frame:
                    return f"closed: {exc}"
                return "closed: end of stream"

            if ftype == protocol.TYPE_SHUTDOWN:
                return "closed: shutdown requested"

            if ftype == protocol.TYPE_INIT:
                try:
                    if initialized:
                        raise MalformedPayload("already initialized")
                    mode, bbox, crop, mask = parse_init(payload)
                    if crop is not None and input_resolution is not None:
                        ow, oh = input_resolution
                        sx = ow / crop.shape[1]
                        sy = oh / crop.shape[0]
                        crop = np.clip(
                            resize_bilinear(crop, ow, oh) + 0.5, 0, 255
                        ).astype(np.uint8)
                        if mask is not None:
                            mask = (
                                resize_bilinear(mask.astype(np.float64), ow, oh)
                                > 0.5
                            ).astype(np.uint8)
                        bbox = (bbox[0] * sx, bbox[1] * sy,
                                bbox[2] * sx, bbox[3] * sy)
                    backend.prepare(mode, bbox, crop, mask)
                    initialized = True
                    log(f"session initialized (mode {mode})")
                except (MalformedPayload, BackendError) as exc:
                    protocol.write_error(writer, str(exc))
                continue

            if ftype == protocol.TYPE_SEGMENT:
                if not initialized:
                    protocol.write_error(writer, "not initialized")
                    continue
                try:
                    patch, bbox = parse_segment(payload)
                    orig_wh = (patch.shape[1], patch.shape[0])
                    if input_resolution is not None:
                        ow, oh = input_resolution
                        sx = ow / patch.shape[1]
                        sy = oh / patch.shape[0]
                        patch = np.clip(
                            resize_bilinear(patch, ow, oh) + 0.5, 0, 255
                        ).astype(np.uint8)
                        bbox = (bbox[0] * sx, bbox[1] * sy,
                                bbox[2] * sx, bbox[3] * sy)
                    pm = backend.segment(patch, bbox)
                    if input_resolution is not None:
                        pm = resize_bilinear(pm, *orig_wh).astype(np.float32)
                        pm = np.clip(pm, 0.0, 1.0).astype(np.float32)
                    protocol.write_frame(
                        writer, protocol.TYPE_RESULT, encode_result(pm)
                    )
                except (MalformedPayload, BackendError) as exc:
                    protocol.write_error(writer, str(exc))
                continue

            protocol.write_error(writer, f"unexpected frame type 0x{ftype:02x}")
    except OSError as exc:
        return f"closed: transport failure ({exc})"


def serve_stdio(**kwargs):
    diag = serve(sys.stdin.buffer, sys.stdout.buffer, **kwargs)
    print(diag, file=sys.stderr)


def serve_tcp(host, port, **kwargs):
    import socket

    srv = socket.create_server((host, port))
    print(f"listening on {srv.getsockname()[0]}:{srv.getsockname()[1]}",
          file=sys.stderr)
    conn, peer = srv.accept()
    with conn:
        diag = serve(conn.makefile("rb"), conn.makefile("wb"), **kwargs)
    srv.close()
    print(diag, file=sys.stderr)
