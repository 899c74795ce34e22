"""segtrack: turn any bounding-box tracker into a segmentation tracker,
and benchmark the result (DAVIS-style J/F, anchored VOT-style A/R/EAO,
error decomposition, speed profiling)."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    BoundingBox,
    Placement,
    SearchingArea,
    Sequence,
    Template,
    TemplateMode,
    binarize,
    crop_searching_area,
    enclosing_bbox,
    paste_map,
    rect_to_mask,
)
from .errors import (  # noqa: F401
    ConfigError,
    ContractError,
    DataError,
    EmptyTargetError,
    GeometryError,
    ParameterError,
    SegtrackError,
    TransportError,
    UsageError,
)
from .pipeline import PipelineConfig, RunRecord, fuse_multiobject, measure_speed, run_sequence  # noqa: F401
from .segmenters import (  # noqa: F401
    ColorBayesSegmenter,
    ExternalSegmenter,
    OracleSegmenter,
    RectFillSegmenter,
    Segmenter,
)
from .trackers import (  # noqa: F401
    KcfTracker,
    NccTracker,
    OracleTracker,
    StaticTracker,
    Tracker,
    kernel_correlation,
)
