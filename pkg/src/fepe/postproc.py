"""Inference-stage reconstruction: binarize a kernel probability map,
extract kernel instances and expand each by area * ratio / perimeter."""

import json
from dataclasses import dataclass, field

import numpy as np
import shapely

from . import _kernels
from .errors import DomainError, InvalidPolygon
from .geometry import Polygon, offset_polygon

_MIN_FACE_AREA = 1e-9
# traced boundaries are pixel staircases; straightening them restores the
# Euclidean perimeter the expansion distance depends on (unit steps deviate
# at most ~0.71 px from their chord, so 1 px keeps true corners)
SIMPLIFY_TOL = 1.0


@dataclass(frozen=True)
class PostprocConfig:
    bin_thresh: float = 0.3
    expand_ratio: float = 1.45
    min_kernel_area: float = 16.0
    score_thresh: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.bin_thresh < 1.0:
            raise DomainError(f"bin_thresh must be in (0, 1), got {self.bin_thresh}")
        if self.expand_ratio <= 0.0:
            raise DomainError(f"expand_ratio must be > 0, got {self.expand_ratio}")
        if self.min_kernel_area < 0.0:
            raise DomainError(f"min_kernel_area must be >= 0, got {self.min_kernel_area}")
        if not 0.0 <= self.score_thresh <= 1.0:
            raise DomainError(f"score_thresh must be in [0, 1], got {self.score_thresh}")


@dataclass(frozen=True)
class Detection:
    polygon: Polygon
    score: float


@dataclass
class DetectionSet:
    image_id: str = ""
    detections: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "detections": [
                {"points": det.polygon.points.tolist(), "score": det.score}
                for det in self.detections
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "DetectionSet":
        dets = [
            Detection(Polygon(entry["points"]), float(entry["score"]))
            for entry in data["detections"]
        ]
        return cls(str(data.get("image_id", "")), dets)


def binarize(score_map, thresh: float) -> np.ndarray:
    """Threshold a probability map; cell = 1 iff probability >= thresh."""
    if not 0.0 < thresh < 1.0:
        raise DomainError(f"threshold must be in (0, 1), got {thresh}")
    score_map = _check_scores(score_map)
    return (score_map >= thresh).astype(np.uint8)


def reconstruct(score_map, cfg: PostprocConfig = PostprocConfig(), image_id: str = "") -> DetectionSet:
    """Recover scored text polygons from a kernel probability map.

    Kernel components are traced, filtered by area and mean probability,
    expanded outward by area * expand_ratio / perimeter and clipped to the
    canvas.
    """
    score_map = _check_scores(score_map)
    h, w = score_map.shape
    mask = (score_map >= cfg.bin_thresh).astype(np.uint8)
    labels, count = _kernels.label_components(mask)
    dets = []
    for k in range(1, count + 1):
        comp = labels == k
        rows, cols = np.nonzero(comp)
        r0, r1 = rows.min(), rows.max() + 1
        c0, c1 = cols.min(), cols.max() + 1
        crop = _kernels.bridge_pinches(comp[r0:r1, c0:c1].astype(np.uint8))
        vx, vy = _kernels.walk_outer_boundary(crop)
        kernel_poly = _simplify(
            Polygon(np.stack([vx + c0, vy + r0], axis=1).astype(np.float64))
        )
        area = kernel_poly.area
        if area <= cfg.min_kernel_area:
            continue
        score = float(score_map[comp].mean())
        if score < cfg.score_thresh:
            continue
        dist = area * cfg.expand_ratio / kernel_poly.perimeter
        expanded = offset_polygon(kernel_poly, dist)
        if not expanded:
            continue
        clipped = _clip_to_canvas(expanded[0], h, w)
        if clipped is None:
            continue
        dets.append(Detection(clipped, score))
    return DetectionSet(image_id, dets)


def _simplify(poly: Polygon) -> Polygon:
    simp = poly.to_shapely().simplify(SIMPLIFY_TOL, preserve_topology=True)
    if simp.is_empty or simp.geom_type != "Polygon" or len(simp.exterior.coords) < 4:
        return poly
    try:
        return Polygon(np.asarray(simp.exterior.coords)[:-1])
    except InvalidPolygon:
        return poly


def _clip_to_canvas(poly: Polygon, height: int, width: int):
    minx, miny, maxx, maxy = poly.bounds()
    if minx >= 0 and miny >= 0 and maxx <= width and maxy <= height:
        return poly
    canvas = shapely.box(0.0, 0.0, float(width), float(height))
    inter = poly.to_shapely().intersection(canvas)
    best = None
    geoms = getattr(inter, "geoms", [inter])
    for geom in geoms:
        if geom.geom_type == "Polygon" and geom.area > _MIN_FACE_AREA:
            if best is None or geom.area > best.area:
                best = geom
    if best is None:
        return None
    return Polygon(np.asarray(best.exterior.coords)[:-1])


def _check_scores(score_map) -> np.ndarray:
    arr = np.asarray(score_map, np.float64)
    if arr.ndim != 2:
        raise DomainError(f"score map must be 2D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DomainError("score map contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError("score map values must lie in [0, 1]")
    return arr
