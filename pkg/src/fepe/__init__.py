"""Computational core for kernel-based arbitrary-shaped text detection:
label generation, multi-task losses with analytic gradients, kernel
post-processing and IoU evaluation."""

from .errors import (
    DomainError,
    FepeError,
    InputError,
    InvalidPolygon,
    IoError,
    ParseError,
)
from .geometry import (
    Polygon,
    label_components,
    offset_polygon,
    polygon_area,
    polygon_perimeter,
    rasterize,
    trace_contours,
)
from .labelgen import (
    AnnotatedImage,
    DirectionOffsets,
    LabelGenConfig,
    LabelSet,
    TextInstance,
    gen_kernel_map,
    gen_labelset,
    gen_scale_map,
    gen_surrounding_maps,
    gen_text_map,
    surrounding_maps_bruteforce,
)
from .losses import LossOutput, LossWeights, bce_ohem, dice_loss, ratio_loss, total_loss
from .postproc import Detection, DetectionSet, PostprocConfig, binarize, reconstruct
from .evalkit import EvalConfig, EvalReport, evaluate, polygon_iou

__version__ = "0.1.0"

__all__ = [
    "AnnotatedImage",
    "Detection",
    "DetectionSet",
    "DirectionOffsets",
    "DomainError",
    "EvalConfig",
    "EvalReport",
    "FepeError",
    "InputError",
    "InvalidPolygon",
    "IoError",
    "LabelGenConfig",
    "LabelSet",
    "LossOutput",
    "LossWeights",
    "ParseError",
    "Polygon",
    "PostprocConfig",
    "TextInstance",
    "bce_ohem",
    "binarize",
    "dice_loss",
    "evaluate",
    "gen_kernel_map",
    "gen_labelset",
    "gen_scale_map",
    "gen_surrounding_maps",
    "gen_text_map",
    "label_components",
    "offset_polygon",
    "polygon_area",
    "polygon_iou",
    "polygon_perimeter",
    "rasterize",
    "ratio_loss",
    "reconstruct",
    "surrounding_maps_bruteforce",
    "total_loss",
    "trace_contours",
]
