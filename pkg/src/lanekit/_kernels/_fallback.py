"""Pure numpy/scipy implementations of the hot kernels.

Used when the compiled extension is unavailable (or forced via the
``LANEKIT_PURE`` environment variable).  Every function here must stay
behaviourally identical to its counterpart in ``_native.pyx``.
"""

import math

import numpy as np
from scipy import ndimage


def segment_distance_field(segs, height, width, origin_x, origin_y,
                           resolution, radius):
    """Per-pixel squared distance (m^2) to the nearest line segment.

    Only pixels within ``radius`` of a segment's inflated bounding box are
    stamped; everywhere else the distance is +inf and the index is -1.
    Ties between segments keep the lower segment index.

    segs: (n, 4) float64 rows [x1, y1, x2, y2] in meters.
    Returns (dist2[h, w] float64, idx[h, w] int32).
    """
    dist2 = np.full((height, width), np.inf)
    idx = np.full((height, width), -1, dtype=np.int32)
    segs = np.asarray(segs, dtype=np.float64).reshape(-1, 4)
    for i in range(segs.shape[0]):
        x1, y1, x2, y2 = segs[i]
        lox, hix = min(x1, x2) - radius, max(x1, x2) + radius
        loy, hiy = min(y1, y2) - radius, max(y1, y2) + radius
        c0 = max(int(math.ceil((lox - origin_x) / resolution - 0.5)), 0)
        c1 = min(int(math.floor((hix - origin_x) / resolution - 0.5)), width - 1)
        r0 = max(int(math.ceil((loy - origin_y) / resolution - 0.5)), 0)
        r1 = min(int(math.floor((hiy - origin_y) / resolution - 0.5)), height - 1)
        if c0 > c1 or r0 > r1:
            continue
        px = origin_x + (np.arange(c0, c1 + 1) + 0.5) * resolution
        py = origin_y + (np.arange(r0, r1 + 1) + 0.5) * resolution
        gx, gy = np.meshgrid(px, py)
        dx, dy = x2 - x1, y2 - y1
        l2 = dx * dx + dy * dy
        if l2 > 0.0:
            t = ((gx - x1) * dx + (gy - y1) * dy) / l2
            np.clip(t, 0.0, 1.0, out=t)
        else:
            t = np.zeros_like(gx)
        qx = x1 + t * dx
        qy = y1 + t * dy
        dd = (gx - qx) ** 2 + (gy - qy) ** 2
        window_d = dist2[r0:r1 + 1, c0:c1 + 1]
        window_i = idx[r0:r1 + 1, c0:c1 + 1]
        better = dd < window_d
        window_d[better] = dd[better]
        window_i[better] = i
    return dist2, idx


def edt_sq(mask):
    """Exact squared Euclidean distance (in pixels) to the nearest nonzero
    pixel of ``mask``.  All-zero input gives +inf everywhere."""
    mask = np.asarray(mask) != 0
    if not mask.any():
        return np.full(mask.shape, np.inf)
    # the feature transform keeps the squared distance an exact integer
    nearest = ndimage.distance_transform_edt(~mask, return_distances=False,
                                             return_indices=True)
    rr, cc = np.indices(mask.shape)
    return ((rr - nearest[0]).astype(np.float64) ** 2
            + (cc - nearest[1]).astype(np.float64) ** 2)


def chamfer_sq(x, y):
    """Sum over both directions of squared nearest-neighbour distances
    between the 2-D point sets ``x`` (n, 2) and ``y`` (m, 2)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 2)
    total = 0.0
    # chunk the rows so the pairwise matrix stays small
    step = max(1, int(4_000_000 // max(len(y), 1)))
    mins_y = np.full(len(y), np.inf)
    for lo in range(0, len(x), step):
        block = x[lo:lo + step]
        d2 = ((block[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
        total += d2.min(axis=1).sum()
        np.minimum(mins_y, d2.min(axis=0), out=mins_y)
    return float(total + mins_y.sum())


_NB = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def zhang_suen(mask):
    """Morphological thinning to a 1-px-wide 8-connected skeleton.

    Simultaneous-deletion semantics: each sub-iteration scans the current
    image and removes all flagged pixels at once.
    """
    img = np.pad((np.asarray(mask) != 0).astype(np.uint8), 1)

    def neighbours(p):
        # P2..P9 clockwise from north, for the interior view
        return [p[1 + dr:p.shape[0] - 1 + dr, 1 + dc:p.shape[1] - 1 + dc]
                for dr, dc in _NB]

    while True:
        changed = False
        for step in (0, 1):
            n = neighbours(img)
            p2, p3, p4, p5, p6, p7, p8, p9 = n
            center = img[1:-1, 1:-1]
            b = sum(a.astype(np.int32) for a in n)
            seq = n + [n[0]]
            a = sum(((seq[k] == 0) & (seq[k + 1] == 1)).astype(np.int32)
                    for k in range(8))
            cond = (center == 1) & (b >= 2) & (b <= 6) & (a == 1)
            if step == 0:
                cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            if cond.any():
                center[cond] = 0
                changed = True
        if not changed:
            break
    return img[1:-1, 1:-1]
