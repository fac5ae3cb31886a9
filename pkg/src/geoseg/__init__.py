"""Interactive binary image segmentation with superpixel geodesics and a
fast bilateral solver."""

from .bilateral import (
    BilateralGrid,
    FbsProblem,
    GridParams,
    bistochastize,
    blur_apply,
    build_grid,
    fbs_solve,
)
from .imagecore import (
    BinaryMask,
    ImageBuffer,
    ScribbleMap,
    YuvImage,
    load_image,
    load_mask,
    load_scribbles,
    rgb_to_lab,
    rgb_to_yuv,
    save_image,
    save_mask,
    save_scribbles,
)
from .metrics import SegmentationScores, score
from .segmenter import (
    SegmentationState,
    SolverConfig,
    config_from_dict,
    config_to_dict,
    energy,
    segment,
    u_update,
    v_update,
)
from .superpixel import (
    SuperpixelGraph,
    SuperpixelPartition,
    build_graph,
    multi_source_dijkstra,
    slic,
)
from .unary import UnaryField, gaussian_unary, geodesic_unary, histogram_unary

__version__ = "0.1.0"

__all__ = [
    "BilateralGrid",
    "BinaryMask",
    "FbsProblem",
    "GridParams",
    "ImageBuffer",
    "ScribbleMap",
    "SegmentationScores",
    "SegmentationState",
    "SolverConfig",
    "SuperpixelGraph",
    "SuperpixelPartition",
    "UnaryField",
    "YuvImage",
    "bistochastize",
    "blur_apply",
    "build_graph",
    "build_grid",
    "config_from_dict",
    "config_to_dict",
    "energy",
    "fbs_solve",
    "gaussian_unary",
    "geodesic_unary",
    "histogram_unary",
    "load_image",
    "load_mask",
    "load_scribbles",
    "multi_source_dijkstra",
    "rgb_to_lab",
    "rgb_to_yuv",
    "save_image",
    "save_mask",
    "save_scribbles",
    "score",
    "segment",
    "slic",
    "u_update",
    "v_update",
]
