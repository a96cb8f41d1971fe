"""Region-aware evaluation of semantic segmentation.

The region-wise measures quantify how badly predicted regions split or
merge ground-truth regions, per class, independent of region areas; the
rest of the package supplies the classic pixel- and region-based error
metrics they are compared against, deterministic file loading, a batch
evaluation harness with JSON/CSV reports, and synthetic data for testing.
"""

from ._version import __version__
from .baselines import (
    AP_THRESHOLDS,
    ClassPixelStats,
    MatchResult,
    average_precision_errors,
    dice_error,
    global_consistency_error,
    iou_error,
    local_refinement_error,
    panoptic_quality_error,
    persello_errors,
    pixel_error,
    pixel_stats,
)
from .errors import (
    DimensionMismatchError,
    FormatError,
    InvalidClassError,
    InvalidPairingError,
    PairingError,
    PanelError,
    PerturbationError,
    SegmetricsError,
    UndefinedMetricError,
)
from .harness import (
    METRIC_KEYS,
    EvalConfig,
    PairedFiles,
    aggregate_records,
    evaluate_dataset,
    evaluate_pair,
    pair_directories,
    sweep_confidence,
    worker_count,
)
from .io import (
    load_confidence_map,
    load_label_map,
    save_confidence_map,
    save_label_map,
)
from .maps import (
    DEFAULT_IGNORE_ID,
    ConfidenceMap,
    LabelMap,
    check_paired,
    check_same_canvas,
)
from .regions import (
    OverlapGraph,
    Region,
    RegionSet,
    binarize_class,
    build_overlap_graph,
    connected_components,
    extract_regions,
)
from .region_metrics import (
    OverSegmentation,
    RegionConfidence,
    UnderSegmentation,
    apply_confidence_threshold,
    over_segmentation_sets,
    region_confidences,
    rom,
    rum,
    under_segmentation_sets,
)
from .report import (
    ClassRecord,
    ImageRecord,
    MetricReport,
    SweepPoint,
    SweepResult,
    emit_report,
    load_report_csv,
    load_report_json,
    serialize,
)

__all__ = [
    "AP_THRESHOLDS",
    "DEFAULT_IGNORE_ID",
    "METRIC_KEYS",
    "ClassPixelStats",
    "ClassRecord",
    "ConfidenceMap",
    "DimensionMismatchError",
    "EvalConfig",
    "FormatError",
    "ImageRecord",
    "InvalidClassError",
    "InvalidPairingError",
    "LabelMap",
    "MatchResult",
    "MetricReport",
    "OverSegmentation",
    "OverlapGraph",
    "PairedFiles",
    "PairingError",
    "PanelError",
    "PerturbationError",
    "Region",
    "RegionConfidence",
    "RegionSet",
    "SegmetricsError",
    "SweepPoint",
    "SweepResult",
    "UndefinedMetricError",
    "UnderSegmentation",
    "__version__",
    "aggregate_records",
    "apply_confidence_threshold",
    "average_precision_errors",
    "binarize_class",
    "build_overlap_graph",
    "check_paired",
    "check_same_canvas",
    "connected_components",
    "dice_error",
    "emit_report",
    "evaluate_dataset",
    "evaluate_pair",
    "extract_regions",
    "global_consistency_error",
    "iou_error",
    "load_confidence_map",
    "load_label_map",
    "load_report_csv",
    "load_report_json",
    "local_refinement_error",
    "over_segmentation_sets",
    "pair_directories",
    "panoptic_quality_error",
    "persello_errors",
    "pixel_error",
    "pixel_stats",
    "region_confidences",
    "rom",
    "rum",
    "save_confidence_map",
    "save_label_map",
    "serialize",
    "sweep_confidence",
    "under_segmentation_sets",
    "worker_count",
]
