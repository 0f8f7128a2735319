"""Polygon primitives: area, perimeter, signed offsetting, rasterization
and contour tracing of binary rasters.

All polygons are stored counter-clockwise (positive shoelace sum) and all
operations are pure functions, safe to call from any thread.
"""

import math

import numpy as np
import shapely
import shapely.ops

from . import _kernels
from .errors import InvalidPolygon

_MITER_LIMIT = 2.0
_AREA_EPS = 1e-9


class Polygon:
    """Simple polygon as an (N, 2) float64 array of (x, y) vertices.

    Construction normalizes orientation to counter-clockwise, drops
    repeated consecutive vertices and rejects degenerate input.
    """

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise InvalidPolygon(f"need at least 3 points, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise InvalidPolygon("non-finite coordinate")
        keep = np.any(pts != np.roll(pts, 1, axis=0), axis=1)
        pts = pts[keep]
        if pts.shape[0] < 3:
            raise InvalidPolygon("fewer than 3 distinct points")
        area2 = _shoelace2(pts)
        if abs(area2) <= _AREA_EPS:
            raise InvalidPolygon("degenerate polygon (zero area)")
        if area2 < 0:
            pts = pts[::-1]
        self.points = np.ascontiguousarray(pts)
        self.points.flags.writeable = False

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"Polygon({self.points.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, Polygon) and np.array_equal(self.points, other.points)

    @property
    def area(self) -> float:
        return polygon_area(self)

    @property
    def perimeter(self) -> float:
        return polygon_perimeter(self)

    @property
    def is_simple(self) -> bool:
        return bool(shapely.LinearRing(self.points).is_simple)

    def bounds(self):
        """(min_x, min_y, max_x, max_y)."""
        return (
            float(self.points[:, 0].min()),
            float(self.points[:, 1].min()),
            float(self.points[:, 0].max()),
            float(self.points[:, 1].max()),
        )

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self.points + np.array([dx, dy]))

    def scaled(self, sx: float, sy: float) -> "Polygon":
        return Polygon(self.points * np.array([sx, sy]))

    def to_shapely(self):
        return shapely.Polygon(self.points)


def _shoelace2(pts) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _as_points(poly) -> np.ndarray:
    pts = poly.points if isinstance(poly, Polygon) else np.asarray(poly, np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise InvalidPolygon(f"need at least 3 points, got shape {getattr(pts, 'shape', None)}")
    return pts


def polygon_area(poly) -> float:
    """Absolute enclosed area (shoelace), orientation-independent."""
    return abs(_shoelace2(_as_points(poly))) / 2.0


def polygon_perimeter(poly) -> float:
    """Sum of edge lengths including the closing edge."""
    pts = _as_points(poly)
    return float(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T).sum())


# ---------------------------------------------------------------------------
# offsetting

def offset_polygon(poly, distance: float):
    """Uniform parallel offset of the boundary.

    Negative distance moves edges inward, positive outward. Joins are
    mitered up to a miter limit of 2, beveled beyond it. A shrink may split
    the polygon or collapse it entirely (empty list). Results are simple
    CCW polygons sorted by descending area.
    """
    if not isinstance(poly, Polygon):
        poly = Polygon(poly)
    if not math.isfinite(distance):
        raise InvalidPolygon("offset distance must be finite")
    if distance == 0:
        return [poly]
    ring = _raw_offset_ring(poly.points, distance)
    if ring.shape[0] < 3:
        return []
    return _resolve_ring(ring)


def _raw_offset_ring(pts, dist):
    """Offset every edge along its outward normal.

    Each vertex contributes both adjacent edge endpoints; when the turn
    bends away from the offset side the gap is bridged by a miter point
    (straight bevel beyond the limit), otherwise the offset edges simply
    cross and the winding filter in _resolve_ring sorts the faces out.
    """
    edges = np.roll(pts, -1, axis=0) - pts
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    good = lengths > 1e-12
    pts, edges, lengths = pts[good], edges[good], lengths[good]
    if pts.shape[0] < 3:
        return np.empty((0, 2))
    # outward unit normal of a CCW (positive shoelace) ring
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1) / lengths[:, None]
    out = []
    for i in range(pts.shape[0]):
        p = pts[i]
        na = normals[i - 1]
        nb = normals[i]
        oa = p + dist * na
        ob = p + dist * nb
        out.append(oa)
        cross = na[0] * nb[1] - na[1] * nb[0]
        if cross * dist > 1e-12:
            # gap on the offset side: miter if within limit, else bevel
            ea = edges[i - 1] / lengths[i - 1]
            eb = edges[i] / lengths[i]
            denom = ea[0] * eb[1] - ea[1] * eb[0]
            t = ((ob[0] - oa[0]) * eb[1] - (ob[1] - oa[1]) * eb[0]) / denom
            miter = oa + t * ea
            if np.hypot(*(miter - p)) <= _MITER_LIMIT * abs(dist):
                out.append(miter)
        out.append(ob)
    return np.asarray(out)


def _resolve_ring(ring):
    """Turn a possibly self-intersecting offset ring into simple polygons,
    keeping the regions the ring winds around positively."""
    dedup = ring[np.any(ring != np.roll(ring, 1, axis=0), axis=1)]
    if dedup.shape[0] < 3:
        return []
    lr = shapely.LinearRing(dedup)
    if lr.is_simple:
        if _shoelace2(dedup) <= _AREA_EPS:
            return []  # inverted or collapsed
        return [Polygon(dedup)]
    closed = np.vstack([dedup, dedup[:1]])
    noded = shapely.ops.unary_union(shapely.LineString(closed))
    kept = []
    for face in shapely.ops.polygonize(noded):
        if face.area <= _AREA_EPS:
            continue
        probe = face.representative_point()
        if _winding_number(dedup, probe.x, probe.y) > 0:
            kept.append(face)
    if not kept:
        return []
    # adjacent positive faces belong to one output region; holes are dropped
    merged = shapely.ops.unary_union(kept)
    results = []
    for geom in getattr(merged, "geoms", [merged]):
        if geom.geom_type == "Polygon" and geom.area > _AREA_EPS:
            results.append(Polygon(np.asarray(geom.exterior.coords)[:-1]))
    results.sort(key=lambda p: -p.area)
    return results


def _winding_number(pts, px, py) -> int:
    x = pts[:, 0] - px
    y = pts[:, 1] - py
    x2 = np.roll(x, -1)
    y2 = np.roll(y, -1)
    cross = x * y2 - x2 * y
    up = (y <= 0) & (y2 > 0) & (cross > 0)
    down = (y2 <= 0) & (y > 0) & (cross < 0)
    return int(up.sum()) - int(down.sum())


# ---------------------------------------------------------------------------
# rasterization and contour tracing

def rasterize(poly, height: int, width: int) -> np.ndarray:
    """Rasterize a polygon onto a height x width uint8 map.

    A cell is 1 iff its center lies inside under the even-odd rule; parts
    outside the canvas are clipped silently.
    """
    if height <= 0 or width <= 0:
        raise InvalidPolygon("canvas dimensions must be positive")
    pts = _as_points(poly)
    if not np.isfinite(pts).all():
        raise InvalidPolygon("non-finite coordinate")
    xs = np.ascontiguousarray(np.append(pts[:, 0], pts[0, 0]))
    ys = np.ascontiguousarray(np.append(pts[:, 1], pts[0, 1]))
    return _kernels.rasterize_polygon(xs, ys, int(height), int(width))


def label_components(mask) -> tuple[np.ndarray, int]:
    """8-connected labels (int32, 1..K by first row-major pixel) and K."""
    mask = _check_binary(mask)
    return _kernels.label_components(mask)


def trace_contours(mask):
    """One CCW polygon per 8-connected foreground component, outer boundary
    only, traced along pixel edges. Holes are ignored. Diagonal single-point
    pinches are bridged by one pixel so every output ring is simple.
    """
    mask = _check_binary(mask)
    labels, count = _kernels.label_components(mask)
    polys = []
    for k in range(1, count + 1):
        rows, cols = np.nonzero(labels == k)
        r0, r1 = rows.min(), rows.max() + 1
        c0, c1 = cols.min(), cols.max() + 1
        comp = (labels[r0:r1, c0:c1] == k).astype(np.uint8)
        comp = _kernels.bridge_pinches(comp)
        vx, vy = _kernels.walk_outer_boundary(comp)
        pts = np.stack([vx + c0, vy + r0], axis=1).astype(np.float64)
        polys.append(Polygon(pts))
    return polys


def _check_binary(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise InvalidPolygon(f"binary map must be 2D and non-empty, got {mask.shape}")
    if mask.dtype != np.uint8:
        mask = mask.astype(np.uint8)
    if mask.max(initial=0) > 1:
        raise InvalidPolygon("binary map values must be 0 or 1")
    return mask
