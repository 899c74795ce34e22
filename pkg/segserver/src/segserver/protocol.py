"""Server-side framing for the STSG segmentation protocol.

Every frame is: magic "STSG" | type u8 | payload_len u32 | payload, all
integers little-endian.  This module is deliberately self-contained so the
server can be deployed without the client library.
"""

from __future__ import annotations

import struct

MAGIC = b"STSG"
TYPE_INIT = 0x01
TYPE_SEGMENT = 0x02
TYPE_RESULT = 0x82
TYPE_SHUTDOWN = 0x7F
TYPE_ERROR = 0xEE

HEADER = struct.Struct("<4sBI")

# keep a sane ceiling so a corrupt length field cannot make us allocate
# gigabytes; 256 MiB covers a 4k RGB frame many times over
MAX_PAYLOAD = 256 * 1024 * 1024


class FramingError(Exception):
    """Bytes on the wire do not form a protocol frame."""


class PeerClosed(Exception):
    """The peer went away (EOF on a frame boundary or mid-frame)."""

    def __init__(self, message, mid_frame=False):
        super().__init__(message)
        self.mid_frame = mid_frame


def read_exact(stream, n, started=False):
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise PeerClosed(
                f"peer closed the stream ({len(buf)}/{n} bytes)",
                mid_frame=started or len(buf) > 0,
            )
        buf += chunk
    return buf


def read_frame(stream):
    """Read one frame, returning (type, payload)."""
    header = read_exact(stream, HEADER.size)
    magic, ftype, plen = HEADER.unpack(header)
    if magic != MAGIC:
        raise FramingError(f"bad magic {magic!r}")
    if plen > MAX_PAYLOAD:
        raise FramingError(f"payload length {plen} exceeds limit")
    payload = read_exact(stream, plen, started=True) if plen else b""
    return ftype, payload


def write_frame(stream, ftype, payload=b""):
    stream.write(HEADER.pack(MAGIC, ftype, len(payload)) + payload)
    stream.flush()


def write_error(stream, message):
    write_frame(stream, TYPE_ERROR, message.encode("utf-8"))
