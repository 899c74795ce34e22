"""Command-line entry point.

    segserver                          # stdio transport, threshold backend
    segserver --transport tcp:0:9000   # listen on port 9000
    segserver --backend threshold --input-resolution 64x64
"""

from __future__ import annotations

import argparse
import sys

from .backends import BACKENDS
from .server import serve_stdio, serve_tcp


def parse_resolution(text):
    w, _, h = text.partition("x")
    try:
        out = (int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")
    if out[0] < 1 or out[1] < 1:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="segserver", description=__doc__)
    p.add_argument(
        "--transport", default="stdio",
        help="'stdio' (default) or 'tcp:<host>:<port>'",
    )
    p.add_argument(
        "--backend", default="threshold", choices=sorted(BACKENDS),
        help="segmentation backend",
    )
    p.add_argument(
        "--input-resolution", type=parse_resolution, default=None,
        metavar="WxH", help="resample requests to this size before segmenting",
    )
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    kwargs = dict(
        backend_name=args.backend, input_resolution=args.input_resolution
    )
    if args.transport == "stdio":
        serve_stdio(**kwargs)
        return 0
    if args.transport.startswith("tcp:"):
        host, _, port = args.transport[4:].rpartition(":")
        try:
            serve_tcp(host or "127.0.0.1", int(port), **kwargs)
        except ValueError:
            print(f"bad tcp endpoint {args.transport!r}", file=sys.stderr)
            return 1
        return 0
    print(f"unknown transport {args.transport!r}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
