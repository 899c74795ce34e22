"""Reference segmentation server speaking the STSG wire protocol."""

from .backends import BACKENDS, ThresholdBackend, make_backend, register_backend
from .server import serve, serve_stdio, serve_tcp

__version__ = "0.1.0"

__all__ = [
    "BACKENDS",
    "ThresholdBackend",
    "make_backend",
    "register_backend",
    "serve",
    "serve_stdio",
    "serve_tcp",
    "__version__",
]
