"""Automatic pectoral muscle identification in MLO mammograms.

The pipeline windows the breast intensities, reconstructs the windowed
image from a marker taken in the top rows, picks a maximum-entropy
threshold, cleans the mask with disk closing and opening, and keeps the
region in the top corner on the chest-wall side.
"""
from .codecs import decode_image, read_image, read_mask, write_image, write_mask
from .errors import (BitDepthError, ColorImageError, DegenerateHistogramError,
                     DegenerateWindowError, DimensionMismatchError, EmptyRegionError,
                     ImageFormatError, InvalidSpecError, PectoralError, StageError,
                     TruncatedImageError)
from .morphology import (Components, Connectivity, StructuringElement, binary_close,
                         binary_dilate, binary_erode, binary_open, connected_components,
                         disk_se, geodesic_reconstruct_dilation)
from .phantom import (ErrorClass, EvalReport, Phantom, PhantomSpec, dice, evaluate,
                      generate_phantom, preset_specs)
from .pipeline import (PectoralStats, PipelineConfig, SegmentationResult, apply_window,
                       build_marker, detect_orientation, extract_boundary, pectoral_stats,
                       render_overlay, segment_breast, segment_pectoral)
from .raster import GrayImage, Orientation, histogram, min_max
from .thresholding import ThresholdResult, apply_threshold, kapur_threshold, otsu_threshold

__version__ = "0.1.0"

__all__ = [
    "BitDepthError", "ColorImageError", "Components", "Connectivity", "DegenerateHistogramError",
    "ErrorClass", "EvalReport", "Phantom", "PhantomSpec", "decode_image", "dice", "evaluate",
    "generate_phantom", "preset_specs", "read_image", "read_mask", "write_image", "write_mask",
    "DegenerateWindowError", "DimensionMismatchError", "EmptyRegionError", "GrayImage",
    "ImageFormatError", "InvalidSpecError", "Orientation", "PectoralError", "PectoralStats",
    "PipelineConfig", "SegmentationResult", "StageError", "StructuringElement", "ThresholdResult",
    "TruncatedImageError", "apply_threshold", "apply_window", "binary_close", "binary_dilate",
    "binary_erode", "binary_open", "build_marker", "connected_components", "detect_orientation",
    "disk_se", "extract_boundary", "geodesic_reconstruct_dilation", "histogram", "kapur_threshold",
    "min_max", "otsu_threshold", "pectoral_stats", "render_overlay", "segment_breast",
    "segment_pectoral",
]
