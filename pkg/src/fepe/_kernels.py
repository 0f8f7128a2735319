"""Hot inner loops: scanline fill, connected components, boundary walks,
windowed counts.

Every operation exists in two interchangeable forms: a numba ``@njit``
kernel and a numpy (or scipy) fallback. The dispatchers at the bottom pick
one per call via :mod:`fepe.accel`. Both forms must produce bit-identical
outputs; the test suite checks this parity directly.
"""

import numpy as np

from . import accel

if accel.NUMBA_AVAILABLE:
    from numba import njit
else:  # pragma: no cover
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


# ---------------------------------------------------------------------------
# scanline polygon fill (even-odd, pixel-center sampling)

def _raster_rows_numpy(xs, ys, height, width, out):
    x1, x2 = xs[:-1], xs[1:]
    y1, y2 = ys[:-1], ys[1:]
    for r in range(height):
        py = r + 0.5
        hit = (y1 <= py) != (y2 <= py)
        if not hit.any():
            continue
        t = (py - y1[hit]) / (y2[hit] - y1[hit])
        cs = np.sort(x1[hit] + t * (x2[hit] - x1[hit]))
        for k in range(0, cs.size - 1, 2):
            c0 = int(np.ceil(cs[k] - 0.5))
            c1 = int(np.ceil(cs[k + 1] - 0.5))
            if c1 > width:
                c1 = width
            if c0 < 0:
                c0 = 0
            if c0 < c1:
                out[r, c0:c1] = 1
    return out


@njit(cache=True, nogil=True)
def _raster_rows_numba(xs, ys, height, width, out):  # pragma: no cover
    ne = xs.shape[0] - 1
    cross = np.empty(ne, np.float64)
    for r in range(height):
        py = r + 0.5
        m = 0
        for e in range(ne):
            y1 = ys[e]
            y2 = ys[e + 1]
            if (y1 <= py) != (y2 <= py):
                t = (py - y1) / (y2 - y1)
                cross[m] = xs[e] + t * (xs[e + 1] - xs[e])
                m += 1
        if m == 0:
            continue
        cs = np.sort(cross[:m])
        for k in range(0, m - 1, 2):
            c0 = int(np.ceil(cs[k] - 0.5))
            c1 = int(np.ceil(cs[k + 1] - 0.5))
            if c1 > width:
                c1 = width
            if c0 < 0:
                c0 = 0
            for c in range(c0, c1):
                out[r, c] = 1
    return out


def rasterize_polygon(xs, ys, height, width):
    """Fill one closed ring (xs[0] == xs[-1]) into a fresh uint8 map.

    A cell (r, c) is set iff its center (c + 0.5, r + 0.5) has an odd
    crossing count, i.e. lies inside under the even-odd rule.
    """
    out = np.zeros((height, width), np.uint8)
    if accel.use_numba():
        return _raster_rows_numba(xs, ys, height, width, out)
    return _raster_rows_numpy(xs, ys, height, width, out)


# ---------------------------------------------------------------------------
# 8-connected component labelling, labels numbered by first row-major pixel

@njit(cache=True, nogil=True)
def _uf_find(parent, i):  # pragma: no cover
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True, nogil=True)
def _label_numba(mask):  # pragma: no cover
    h, w = mask.shape
    parent = np.full(h * w, -1, np.int64)
    for r in range(h):
        for c in range(w):
            if mask[r, c] == 0:
                continue
            idx = r * w + c
            parent[idx] = idx
            if c > 0 and mask[r, c - 1] != 0:
                ra, rb = _uf_find(parent, idx), _uf_find(parent, idx - 1)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            if r > 0:
                if c > 0 and mask[r - 1, c - 1] != 0:
                    ra, rb = _uf_find(parent, idx), _uf_find(parent, idx - w - 1)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
                if mask[r - 1, c] != 0:
                    ra, rb = _uf_find(parent, idx), _uf_find(parent, idx - w)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
                if c + 1 < w and mask[r - 1, c + 1] != 0:
                    ra, rb = _uf_find(parent, idx), _uf_find(parent, idx - w + 1)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
    labels = np.zeros((h, w), np.int32)
    remap = np.zeros(h * w, np.int32)
    count = 0
    for r in range(h):
        for c in range(w):
            if mask[r, c] == 0:
                continue
            root = _uf_find(parent, r * w + c)
            if remap[root] == 0:
                count += 1
                remap[root] = count
            labels[r, c] = remap[root]
    return labels, count


def _label_scipy(mask):
    from scipy import ndimage

    raw, count = ndimage.label(mask, structure=np.ones((3, 3), np.uint8))
    if count == 0:
        return raw.astype(np.int32), 0
    flat = raw.ravel()
    first = np.full(count + 1, flat.size, np.int64)
    np.minimum.at(first, flat, np.arange(flat.size))
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(count + 1, np.int32)
    remap[order + 1] = np.arange(1, count + 1, dtype=np.int32)
    return remap[raw], count


def label_components(mask):
    """Label 8-connected foreground; labels 1..K in row-major first-pixel order."""
    if accel.use_numba():
        return _label_numba(np.ascontiguousarray(mask, dtype=np.uint8))
    return _label_scipy(mask)


# ---------------------------------------------------------------------------
# diagonal pinch bridging: make a component 4-boundary-traceable by filling
# one corner of every checkerboard 2x2 pattern; repeats until stable

@njit(cache=True, nogil=True)
def _bridge_numba(mask):  # pragma: no cover
    h, w = mask.shape
    out = mask.copy()
    changed = True
    while changed:
        changed = False
        fills_r = np.empty(h * w, np.int64)
        fills_c = np.empty(h * w, np.int64)
        n = 0
        for r in range(h - 1):
            for c in range(w - 1):
                a = out[r, c]
                b = out[r, c + 1]
                cc = out[r + 1, c]
                d = out[r + 1, c + 1]
                if a != 0 and d != 0 and b == 0 and cc == 0:
                    fills_r[n] = r
                    fills_c[n] = c + 1
                    n += 1
                elif b != 0 and cc != 0 and a == 0 and d == 0:
                    fills_r[n] = r
                    fills_c[n] = c
                    n += 1
        for k in range(n):
            out[fills_r[k], fills_c[k]] = 1
        changed = n > 0
    return out


def _bridge_numpy(mask):
    out = mask.copy()
    while True:
        a = out[:-1, :-1]
        b = out[:-1, 1:]
        c = out[1:, :-1]
        d = out[1:, 1:]
        pat_a = (a != 0) & (d != 0) & (b == 0) & (c == 0)
        pat_b = (b != 0) & (c != 0) & (a == 0) & (d == 0)
        if not (pat_a.any() or pat_b.any()):
            return out
        out[:-1, 1:][pat_a] = 1
        out[:-1, :-1][pat_b] = 1


def bridge_pinches(mask):
    if accel.use_numba():
        return _bridge_numba(np.ascontiguousarray(mask, dtype=np.uint8))
    return _bridge_numpy(np.asarray(mask, dtype=np.uint8))


# ---------------------------------------------------------------------------
# outer boundary walk along pixel cracks, inside kept on the right.
# The mask must be a single pinch-free component. Corner (x, y) of the grid
# touches cells NW=(y-1,x-1), NE=(y-1,x), SW=(y,x-1), SE=(y,x).

def _walk_impl(padded, sr, sc, max_steps, vx, vy):
    # padded has a 1-cell zero border; corner (x, y) in original coords
    # reads padded[y + dy][x + dx] for the four surrounding cells.
    dxs = (1, 0, -1, 0)  # R, D, L, U
    dys = (0, 1, 0, -1)
    x0, y0 = sc, sr
    d0 = 0  # start travelling right along the top edge of the first pixel
    x, y, d = x0, y0, d0
    n = 0
    steps = 0
    while steps < max_steps:
        steps += 1
        x += dxs[d]
        y += dys[d]
        # right-front and left-front cells for the incoming direction
        if d == 0:
            rf = padded[y + 1, x + 1]
            lf = padded[y, x + 1]
        elif d == 1:
            rf = padded[y + 1, x]
            lf = padded[y + 1, x + 1]
        elif d == 2:
            rf = padded[y, x]
            lf = padded[y + 1, x]
        else:
            rf = padded[y, x + 1]
            lf = padded[y, x]
        if rf == 0:
            d2 = (d + 1) % 4
        elif lf == 0:
            d2 = d
        else:
            d2 = (d + 3) % 4
        if d2 != d:
            vx[n] = x
            vy[n] = y
            n += 1
        d = d2
        if x == x0 and y == y0 and d == d0:
            return n
    return 0


_walk_numba = njit(cache=True, nogil=True)(_walk_impl) if accel.NUMBA_AVAILABLE else None


def walk_outer_boundary(mask):
    """Trace the outer crack boundary of a single pinch-free component.

    Returns (xs, ys) int64 corner coordinates at direction changes, in walk
    order. Raises ValueError if the walk fails to close (pinched input).
    """
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    sr = int(rows[0])
    sc = int(cols[rows == sr].min())
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), np.uint8)
    padded[1:-1, 1:-1] = mask
    max_steps = 4 * int(mask.sum()) + 16
    vx = np.empty(max_steps, np.int64)
    vy = np.empty(max_steps, np.int64)
    if accel.use_numba():
        n = _walk_numba(padded, sr, sc, max_steps, vx, vy)
    else:
        n = _walk_impl(padded, sr, sc, max_steps, vx, vy)
    if n == 0:
        raise ValueError("boundary walk did not close; mask is not pinch-free")
    return vx[:n].copy(), vy[:n].copy()


# ---------------------------------------------------------------------------
# directional windowed counts of positive pixels

def window_counts_fast(mask, mu, offsets):
    """Integral-image windowed counts, O(H*W) independent of mu.

    offsets is an int array (4, 2) of (dx, dy) window-center displacements.
    Output channel n counts mask pixels inside the mu x mu window centred at
    (col + dx_n, row + dy_n), clipped to the canvas.
    """
    mask = np.asarray(mask)
    h, w = mask.shape
    rad = mu // 2
    integ = np.zeros((h + 1, w + 1), np.int64)
    np.cumsum(np.cumsum(mask, axis=0, dtype=np.int64), axis=1, out=integ[1:, 1:])
    out = np.empty((h, w, 4), np.uint16)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    for n in range(4):
        dx, dy = int(offsets[n, 0]), int(offsets[n, 1])
        cr = rows + dy
        cc = cols + dx
        r0 = np.clip(cr - rad, 0, h)
        r1 = np.clip(cr + rad + 1, 0, h)
        c0 = np.clip(cc - rad, 0, w)
        c1 = np.clip(cc + rad + 1, 0, w)
        out[:, :, n] = (
            integ[r1, c1] - integ[r0, c1] - integ[r1, c0] + integ[r0, c0]
        ).astype(np.uint16)
    return out


@njit(cache=True, nogil=True)
def _window_counts_brute_numba(mask, rad, offsets):  # pragma: no cover
    h, w = mask.shape
    out = np.zeros((h, w, 4), np.uint16)
    for i in range(h):
        for j in range(w):
            for n in range(4):
                cr = i + offsets[n, 1]
                cc = j + offsets[n, 0]
                r0 = max(0, cr - rad)
                r1 = min(h - 1, cr + rad)
                c0 = max(0, cc - rad)
                c1 = min(w - 1, cc + rad)
                s = 0
                for r in range(r0, r1 + 1):
                    for c in range(c0, c1 + 1):
                        s += mask[r, c]
                out[i, j, n] = s
    return out


def _window_counts_brute_numpy(mask, rad, offsets):
    h, w = mask.shape
    src = np.asarray(mask, dtype=np.uint16)
    out = np.zeros((h, w, 4), np.uint16)
    for n in range(4):
        dx, dy = int(offsets[n, 0]), int(offsets[n, 1])
        for u in range(-rad, rad + 1):
            for v in range(-rad, rad + 1):
                sy = dy + u  # out[i, j] += mask[i + sy, j + sx]
                sx = dx + v
                dr0, dr1 = max(0, -sy), min(h, h - sy)
                dc0, dc1 = max(0, -sx), min(w, w - sx)
                if dr0 >= dr1 or dc0 >= dc1:
                    continue
                out[dr0:dr1, dc0:dc1, n] += src[dr0 + sy:dr1 + sy, dc0 + sx:dc1 + sx]
    return out


def window_counts_naive(mask, mu, offsets):
    """Reference O(H*W*mu*mu) windowed counts; oracle for the fast path."""
    rad = mu // 2
    offsets = np.asarray(offsets, dtype=np.int64)
    if accel.use_numba():
        return _window_counts_brute_numba(
            np.ascontiguousarray(mask, dtype=np.uint8), rad, offsets
        )
    return _window_counts_brute_numpy(mask, rad, offsets)
