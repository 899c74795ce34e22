"""Binary wire protocol for external segmenters.

Every frame is: magic "STSG" | type u8 | payload_len u32 | payload,
all integers little-endian.

    0x01 INIT     mode u8 (1=bbox-channel, 2=image-crop, 3=crop+mask)
                  | bbox 4 x f32 (cx, cy, w, h in crop coords)
                  | W u32 | H u32
                  | RGB8 crop (W*H*3 bytes, present iff mode >= 2)
                  | mask u8 x W*H (present iff mode = 3)
    0x02 SEGMENT  W u32 | H u32 | RGB8 patch | bbox 4 x f32 (patch coords)
    0x82 RESULT   W u32 | H u32 | f32 x W*H probabilities
    0x7f SHUTDOWN (empty payload)
    0xee ERROR    UTF-8 message

The peer must answer each SEGMENT with exactly one RESULT or ERROR.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import TransportError

MAGIC = b"STSG"
TYPE_INIT = 0x01
TYPE_SEGMENT = 0x02
TYPE_RESULT = 0x82
TYPE_SHUTDOWN = 0x7F
TYPE_ERROR = 0xEE

_HEADER = struct.Struct("<4sBI")

__all__ = [
    "MAGIC",
    "TYPE_INIT",
    "TYPE_SEGMENT",
    "TYPE_RESULT",
    "TYPE_SHUTDOWN",
    "TYPE_ERROR",
    "pack_frame",
    "read_frame",
    "encode_init",
    "encode_segment",
    "decode_result",
    "encode_result",
    "encode_error",
    "encode_shutdown",
]


def pack_frame(ftype, payload=b""):
    return _HEADER.pack(MAGIC, ftype, len(payload)) + payload


def _read_exact(stream, n):
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise TransportError(
                f"peer closed the stream mid-frame ({len(buf)}/{n} bytes)"
            )
        buf += chunk
    return buf


def read_frame(stream):
    """Read one protocol frame, returning (type, payload)."""
    header = _read_exact(stream, _HEADER.size)
    magic, ftype, plen = _HEADER.unpack(header)
    if magic != MAGIC:
        raise TransportError(f"bad magic {magic!r}")
    payload = _read_exact(stream, plen) if plen else b""
    return ftype, payload


def encode_init(mode, bbox_xyxy, crop=None, mask=None):
    """Build an INIT frame.  ``bbox_xyxy`` is (cx, cy, w, h) in crop coords."""
    mode = int(mode)
    body = struct.pack("<B4f", mode, *[float(v) for v in bbox_xyxy])
    if mode >= 2:
        if crop is None:
            raise TransportError("INIT with mode >= 2 requires a crop")
        h, w = crop.shape[:2]
        body += struct.pack("<II", w, h)
        body += np.ascontiguousarray(crop, dtype=np.uint8).tobytes()
        if mode == 3:
            if mask is None or mask.shape != (h, w):
                raise TransportError("INIT with mode 3 requires a matching mask")
            body += np.ascontiguousarray(mask, dtype=np.uint8).tobytes()
    else:
        body += struct.pack("<II", 0, 0)
    return pack_frame(TYPE_INIT, body)


def encode_segment(patch, bbox_patch):
    h, w = patch.shape[:2]
    body = struct.pack("<II", w, h)
    body += np.ascontiguousarray(patch, dtype=np.uint8).tobytes()
    body += struct.pack("<4f", *[float(v) for v in bbox_patch])
    return pack_frame(TYPE_SEGMENT, body)


def encode_result(pm):
    h, w = pm.shape
    body = struct.pack("<II", w, h)
    body += np.ascontiguousarray(pm, dtype=np.float32).tobytes()
    return pack_frame(TYPE_RESULT, body)


def encode_error(message):
    return pack_frame(TYPE_ERROR, message.encode("utf-8"))


def encode_shutdown():
    return pack_frame(TYPE_SHUTDOWN)


def decode_result(payload):
    if len(payload) < 8:
        raise TransportError("RESULT payload too short")
    w, h = struct.unpack_from("<II", payload)
    need = 8 + 4 * w * h
    if len(payload) != need:
        raise TransportError(
            f"RESULT payload length {len(payload)} != expected {need}"
        )
    pm = np.frombuffer(payload, dtype="<f4", count=w * h, offset=8)
    return pm.reshape(h, w).astype(np.float64)
