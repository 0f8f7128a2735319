"""Supervision target generation.

From an annotated image this produces the four training rasters: a text
map, a kernel map (instances shrunk inward by (S/L)*(1 - delta^2)), a
scale map holding each kernel's pixel count, and four directional
surrounding maps counting kernel pixels in a displaced mu x mu window.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import InvalidPolygon
from .geometry import Polygon, label_components, polygon_area, polygon_perimeter, offset_polygon, rasterize


@dataclass(frozen=True)
class TextInstance:
    polygon: Polygon
    ignore: bool = False


@dataclass(frozen=True)
class AnnotatedImage:
    height: int
    width: int
    instances: list
    image_id: str = ""

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise InvalidPolygon(f"canvas {self.height}x{self.width} is empty")


@dataclass(frozen=True)
class LabelGenConfig:
    """Knobs for label generation.

    delta: shrinking ratio in (0, 1).
    a_min: minimum kernel area in px^2; smaller kernels are dropped.
    mu: side of the perception window (odd, >= 1).
    target_size: optional (height, width) the image is rescaled to before
        any rasterization.
    """

    delta: float = 0.4
    a_min: float = 16.0
    mu: int = 5
    target_size: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.a_min < 0:
            raise ValueError(f"a_min must be >= 0, got {self.a_min}")
        if self.mu < 1 or self.mu % 2 == 0:
            raise ValueError(f"mu must be odd and >= 1, got {self.mu}")
        if self.target_size is not None:
            th, tw = self.target_size
            if th <= 0 or tw <= 0:
                raise ValueError(f"target_size must be positive, got {self.target_size}")


@dataclass(frozen=True)
class DirectionOffsets:
    """Window-center displacements, index order left/right/up/down."""

    offsets: tuple

    def __post_init__(self):
        if len(self.offsets) != 4:
            raise ValueError("need exactly four direction offsets")
        (lx, ly), (rx, ry), (ux, uy), (dx, dy) = self.offsets
        if lx != -rx or ly != ry or ux != dx or uy != -dy:
            raise ValueError("left/right must mirror in x and up/down in y")

    @classmethod
    def for_window(cls, mu: int) -> "DirectionOffsets":
        """Each window abuts the target pixel on one side without containing it."""
        d = (mu + 1) // 2
        return cls(((-d, 0), (d, 0), (0, -d), (0, d)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=np.int64)


@dataclass
class LabelSet:
    text_map: np.ndarray  # u8 HxW
    kernel_map: np.ndarray  # u8 HxW
    ignore_mask: np.ndarray  # u8 HxW, 1 = excluded from supervision
    scale_map: np.ndarray  # f32 HxW, kernel pixel counts
    surrounding_maps: np.ndarray  # u16 HxWx4, order left/right/up/down
    kernel_polygons: list = field(default_factory=list)  # (instance idx, Polygon)


def gen_text_map(img: AnnotatedImage):
    """Rasterize non-ignore instances into the text map and ignore
    instances into the ignore mask."""
    text = np.zeros((img.height, img.width), np.uint8)
    ignore = np.zeros((img.height, img.width), np.uint8)
    for i, inst in enumerate(img.instances):
        try:
            cell = rasterize(inst.polygon, img.height, img.width)
        except InvalidPolygon as exc:
            raise InvalidPolygon(f"instance {i}: {exc}") from exc
        if inst.ignore:
            np.maximum(ignore, cell, out=ignore)
        else:
            np.maximum(text, cell, out=text)
    return text, ignore


def gen_kernel_map(img: AnnotatedImage, cfg: LabelGenConfig):
    """Shrink each non-ignore instance inward by (S/L)*(1 - delta^2) and
    rasterize the pieces whose area exceeds a_min.

    Returns the kernel map and the kept (instance index, Polygon) pairs.
    Instances whose kernel collapses are dropped silently.
    """
    kernel = np.zeros((img.height, img.width), np.uint8)
    kept = []
    shrink_factor = 1.0 - cfg.delta * cfg.delta
    for i, inst in enumerate(img.instances):
        if inst.ignore:
            continue
        poly = inst.polygon
        try:
            offset = polygon_area(poly) / polygon_perimeter(poly) * shrink_factor
            pieces = offset_polygon(poly, -offset)
        except InvalidPolygon as exc:
            raise InvalidPolygon(f"instance {i}: {exc}") from exc
        for piece in pieces:
            if piece.area > cfg.a_min:
                kept.append((i, piece))
                np.maximum(kernel, rasterize(piece, img.height, img.width), out=kernel)
    return kernel, kept


def gen_scale_map(kernel_map, kernel_polygons=None) -> np.ndarray:
    """Give every pixel of each kernel component that component's pixel
    count; background stays 0. Components must be disjoint per kernel."""
    labels, count = label_components(kernel_map)
    scale = np.zeros(kernel_map.shape, np.float32)
    if count == 0:
        return scale
    counts = np.bincount(labels.ravel(), minlength=count + 1).astype(np.float32)
    fg = labels > 0
    scale[fg] = counts[labels[fg]]
    return scale


def gen_surrounding_maps(kernel_map, mu: int, offsets: Optional[DirectionOffsets] = None) -> np.ndarray:
    """Count kernel pixels in a mu x mu window displaced from each pixel in
    four directions, clipped to the canvas. Integral-image implementation,
    O(H*W) independent of mu."""
    if mu < 1 or mu % 2 == 0:
        raise ValueError(f"mu must be odd and >= 1, got {mu}")
    if offsets is None:
        offsets = DirectionOffsets.for_window(mu)
    return _kernels.window_counts_fast(np.asarray(kernel_map), mu, offsets.as_array())


def surrounding_maps_bruteforce(kernel_map, mu: int, offsets: Optional[DirectionOffsets] = None) -> np.ndarray:
    """Direct nested-loop windowed count; the independent reference the
    fast path is checked against."""
    if offsets is None:
        offsets = DirectionOffsets.for_window(mu)
    return _kernels.window_counts_naive(np.asarray(kernel_map), mu, offsets.as_array())


def gen_labelset(img: AnnotatedImage, cfg: LabelGenConfig) -> LabelSet:
    """Run the full label pipeline for one image."""
    if cfg.target_size is not None:
        th, tw = cfg.target_size
        sy, sx = th / img.height, tw / img.width
        instances = [
            TextInstance(inst.polygon.scaled(sx, sy), inst.ignore) for inst in img.instances
        ]
        img = AnnotatedImage(int(th), int(tw), instances, img.image_id)
    text, ignore = gen_text_map(img)
    kernel, kernel_polys = gen_kernel_map(img, cfg)
    scale = gen_scale_map(kernel, kernel_polys)
    surrounding = gen_surrounding_maps(kernel, cfg.mu)
    return LabelSet(
        text_map=text,
        kernel_map=kernel,
        ignore_mask=ignore,
        scale_map=scale,
        surrounding_maps=surrounding,
        kernel_polygons=kernel_polys,
    )
