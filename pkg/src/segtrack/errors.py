"""Exception hierarchy shared by all segtrack modules.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
TransportError -> 3, everything else -> 1.
"""


class SegtrackError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(SegtrackError):
    """Degenerate boxes, zero-area crops, boxes outside the frame."""


class EmptyTargetError(GeometryError):
    """An operation that needs at least one positive pixel got none."""


class ContractError(SegtrackError):
    """Dimension mismatch or wrong template mode between components."""


class UsageError(SegtrackError):
    """API misuse: update before init, double init, missing timings."""


class ParameterError(SegtrackError):
    """A numeric parameter outside its valid range."""


class ConfigError(SegtrackError):
    """Malformed or inconsistent benchmark configuration."""


class DataError(SegtrackError):
    """Dataset problems: missing files, count mismatches, bad encodings."""


class TransportError(SegtrackError):
    """External-segmenter wire-protocol failure; carries the peer message."""
