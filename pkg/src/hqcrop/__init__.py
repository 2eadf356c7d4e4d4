"""hqcrop: crop and quality-filter human images from detection corpora.

The pipeline imports person boxes from annotation formats or detector
output, gates blurry sources by Laplacian variance, squarifies and
deduplicates boxes with center-priority NMS, crops and resizes to
512x512, scores the crops with no-reference quality metrics, and selects
the top fraction by standardized aggregate score.  A seedable degradation
synthesizer builds paired LQ data from the curated set.
"""

from .annotations import (
    BBox,
    DatasetOrigin,
    LabelAliasMap,
    SourceRecord,
    parse_coco,
    parse_detection_import,
    parse_odgt,
    parse_oid_csv,
)
from .boxgeom import SquareCrop, center_priority_nms, iou, size_gate, squarify
from .common import ConfigError, ParseError, PipelineError, WarningSink
from .imaging import (
    crop,
    downsample_half,
    image_size,
    laplacian_variance,
    load_image,
    resize,
    save_image,
    to_luma,
)
from .selection import (
    Direction,
    ManifestEntry,
    MetricSource,
    MetricSpec,
    RowMeta,
    ScoreTable,
    SelectionManifest,
    Status,
    ingest_external_scores,
    normalize,
    select_top,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "ConfigError",
    "DatasetOrigin",
    "Direction",
    "LabelAliasMap",
    "ManifestEntry",
    "MetricSource",
    "MetricSpec",
    "ParseError",
    "PipelineError",
    "RowMeta",
    "ScoreTable",
    "SelectionManifest",
    "SourceRecord",
    "SquareCrop",
    "Status",
    "WarningSink",
    "center_priority_nms",
    "crop",
    "downsample_half",
    "image_size",
    "ingest_external_scores",
    "iou",
    "laplacian_variance",
    "load_image",
    "normalize",
    "parse_coco",
    "parse_detection_import",
    "parse_odgt",
    "parse_oid_csv",
    "resize",
    "save_image",
    "select_top",
    "size_gate",
    "squarify",
    "to_luma",
]
