"""livewire-oct: interactive livewire segmentation engine for OCT B-scans."""

from .config import BoundaryId, PipelineConfig, Polarity, default_config
from .imgproc import (
    CostMap,
    MorphOp,
    build_feature_map,
    canny,
    fluid_feature_map,
    gaussian_blur,
    gradient_vertical,
    morph,
)
from .livewire import (
    Anchor,
    Boundary,
    BoundaryMode,
    PathResult,
    assemble_boundary,
    close_contour,
    shortest_free_path,
    shortest_layer_path,
    splice_correction,
)
from .annotate import ModeKind, Session, filter_small_fluids, grid_boundary
from .metrics import (
    BlandAltmanStats,
    MetricsReport,
    bland_altman,
    compare_records,
    dice,
    irregularity_index,
    mean_boundary,
    summarize_effort,
    unsigned_error,
)
from .oct_io import (
    export_record,
    load_portable,
    load_record,
    parse_vol,
    parse_vol_file,
    save_portable,
    write_vol,
)
from .peripapillary import (
    FlattenMap,
    ShadowMask,
    detect_vessel_shadows,
    estimate_baseline,
    flatten,
    inpaint_shadows,
    preprocess_circumpapillary,
    unflatten_boundary,
)
from .phantom import PhantomSpec, PhantomTruth, generate
from .records import FluidLabel, FluidRegion, SegmentationRecord, rasterize_contour
from .volume import BScan, Eye, ScanKind, Volume

__version__ = "0.1.0"

__all__ = [
    "Anchor", "BScan", "BlandAltmanStats", "Boundary", "BoundaryId",
    "BoundaryMode", "CostMap", "Eye", "FlattenMap", "FluidLabel",
    "FluidRegion", "MetricsReport", "ModeKind", "MorphOp", "PathResult",
    "PhantomSpec", "PhantomTruth", "PipelineConfig", "Polarity", "ScanKind",
    "SegmentationRecord", "Session", "ShadowMask", "Volume",
    "assemble_boundary", "bland_altman", "build_feature_map", "canny",
    "close_contour", "compare_records", "default_config",
    "detect_vessel_shadows", "dice", "estimate_baseline", "export_record",
    "filter_small_fluids", "flatten", "fluid_feature_map", "gaussian_blur",
    "generate", "gradient_vertical", "grid_boundary", "inpaint_shadows",
    "irregularity_index", "load_portable", "load_record", "mean_boundary",
    "morph", "parse_vol", "parse_vol_file", "preprocess_circumpapillary",
    "rasterize_contour", "save_portable", "shortest_free_path",
    "shortest_layer_path", "splice_correction", "summarize_effort",
    "unflatten_boundary", "unsigned_error", "write_vol",
]
