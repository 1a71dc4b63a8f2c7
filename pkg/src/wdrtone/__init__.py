"""Multi-receptive-field tone mapping for wide-dynamic-range images.

Each pixel is tone mapped against nested local windows via cumulative window
histograms, the per-window results are fused with local-variance weights, and
summed-area tables plus integral histograms make every window query O(1).
"""

from .errors import (
    ContractViolationError,
    DimensionError,
    HdrFormatError,
    ParameterError,
    RangeError,
    ToneMapError,
    TruncationError,
    UnsupportedOrientationError,
)
from .hdr_io import (
    HdrImage,
    LdrImage,
    load_hdr_file,
    quantize_ldr,
    read_pfm,
    read_radiance_hdr,
    save_ldr,
    write_ldr,
    write_pfm,
    write_radiance_hdr,
)
from .integral import (
    IntegralHistogram,
    IntegralImage,
    Region,
    bin_index_map,
    build_integral_histogram,
    build_integral_image,
    region_histogram,
    region_sum,
    region_variance,
)
from .params import TmoParams
from .pipeline import StageTimings, tone_map_image, tone_map_to_array
from .tmo import (
    FieldExtent,
    LogLuminance,
    ScaleSchedule,
    compute_bin_edges,
    fuse_scales,
    log_transform,
    make_scale_schedule,
    max_scale_count,
    restore_color,
    rgb_to_luminance,
    tone_map_at_scale,
    weight_map_at_scale,
)

__version__ = "0.1.0"

__all__ = [
    "ContractViolationError",
    "DimensionError",
    "FieldExtent",
    "HdrFormatError",
    "HdrImage",
    "IntegralHistogram",
    "IntegralImage",
    "LdrImage",
    "LogLuminance",
    "ParameterError",
    "RangeError",
    "Region",
    "ScaleSchedule",
    "StageTimings",
    "TmoParams",
    "ToneMapError",
    "TruncationError",
    "UnsupportedOrientationError",
    "bin_index_map",
    "build_integral_histogram",
    "build_integral_image",
    "compute_bin_edges",
    "fuse_scales",
    "load_hdr_file",
    "log_transform",
    "make_scale_schedule",
    "max_scale_count",
    "quantize_ldr",
    "read_pfm",
    "read_radiance_hdr",
    "region_histogram",
    "region_sum",
    "region_variance",
    "restore_color",
    "rgb_to_luminance",
    "save_ldr",
    "tone_map_at_scale",
    "tone_map_image",
    "tone_map_to_array",
    "weight_map_at_scale",
    "write_ldr",
    "write_pfm",
    "write_radiance_hdr",
    "__version__",
]
