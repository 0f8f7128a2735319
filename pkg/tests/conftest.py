"""Shared fixtures and independent oracles used across the suite."""

import collections

import numpy as np
import pytest

from fepe.geometry import Polygon


# ---------------------------------------------------------------------------
# independent oracles (deliberately naive implementations)

def point_in_polygon(px, py, pts) -> bool:
    """Even-odd rule via ray casting; independent of the package rasterizer."""
    inside = False
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if (y1 <= py) != (y2 <= py):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < xc:
                inside = not inside
    return inside


def rasterize_oracle(pts, height, width) -> np.ndarray:
    out = np.zeros((height, width), np.uint8)
    for r in range(height):
        for c in range(width):
            if point_in_polygon(c + 0.5, r + 0.5, pts):
                out[r, c] = 1
    return out


def flood_fill_components(mask) -> tuple:
    """BFS 8-connected labelling; labels by first row-major pixel."""
    mask = np.asarray(mask)
    h, w = mask.shape
    labels = np.zeros((h, w), np.int32)
    count = 0
    for r0 in range(h):
        for c0 in range(w):
            if mask[r0, c0] == 0 or labels[r0, c0] != 0:
                continue
            count += 1
            queue = collections.deque([(r0, c0)])
            labels[r0, c0] = count
            while queue:
                r, c = queue.popleft()
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        rr, cc = r + dr, c + dc
                        if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] and not labels[rr, cc]:
                            labels[rr, cc] = count
                            queue.append((rr, cc))
    return labels, count


def window_counts_oracle(mask, mu, offsets) -> np.ndarray:
    """Tiny pure-python windowed counter for small maps."""
    mask = np.asarray(mask)
    h, w = mask.shape
    rad = mu // 2
    out = np.zeros((h, w, 4), np.int64)
    for i in range(h):
        for j in range(w):
            for n, (dx, dy) in enumerate(offsets):
                cr, cc = i + dy, j + dx
                s = 0
                for r in range(max(0, cr - rad), min(h - 1, cr + rad) + 1):
                    for c in range(max(0, cc - rad), min(w - 1, cc + rad) + 1):
                        s += int(mask[r, c])
                out[i, j, n] = s
    return out


# ---------------------------------------------------------------------------
# random shape generators

def random_convex_polygon(rng, n_range=(4, 11), scale=(25.0, 70.0), center=(200.0, 200.0),
                          min_side=20.0, max_gap_deg=100.0):
    """Random convex polygon circumscribing a jittered circle (tangential
    family): every inscribed-circle shape the expansion formula inverts."""
    while True:
        n = int(rng.integers(*n_range))
        rho = rng.uniform(*scale)
        gaps = rng.uniform(1.0, 2.2, n)
        ang = np.cumsum(gaps) / gaps.sum() * 2 * np.pi + rng.uniform(0, 2 * np.pi)
        wrapped = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        if wrapped.max() > np.radians(max_gap_deg):
            continue
        rad = rho * rng.uniform(0.97, 1.03, n)
        pts = []
        ok = True
        for i in range(n):
            j = (i + 1) % n
            a1, r1 = ang[i], rad[i]
            a2, r2 = ang[j], rad[j]
            det = np.cos(a1) * np.sin(a2) - np.sin(a1) * np.cos(a2)
            if abs(det) < 1e-9:
                ok = False
                break
            x = (r1 * np.sin(a2) - r2 * np.sin(a1)) / det
            y = (r2 * np.cos(a1) - r1 * np.cos(a2)) / det
            pts.append((x + center[0], y + center[1]))
        if not ok:
            continue
        try:
            poly = Polygon(pts)
        except Exception:
            continue
        e = np.roll(poly.points, -1, axis=0) - poly.points
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if (cross <= 0).any():
            continue
        if np.hypot(e[:, 0], e[:, 1]).min() < min_side:
            continue
        return poly


def random_layout(rng, height=256, width=256, max_instances=4, with_ignore=True):
    """Random non-overlapping-ish annotated layout for label invariants."""
    from fepe.labelgen import AnnotatedImage, TextInstance

    instances = []
    n = int(rng.integers(1, max_instances + 1))
    cells = [(60, 60), (60, 190), (190, 60), (190, 190)]
    rng.shuffle(cells)
    for k in range(n):
        cx, cy = cells[k]
        poly = random_convex_polygon(
            rng, scale=(18.0, 45.0), center=(cx, cy), min_side=10.0
        )
        ignore = bool(with_ignore and rng.random() < 0.2)
        instances.append(TextInstance(poly, ignore))
    return AnnotatedImage(height, width, instances, f"layout{rng.integers(1 << 30)}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)
