# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the raster and point-set inner loops.

Mirrors _fallback.py; both backends must produce identical results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, floor

cnp.import_array()


def segment_distance_field(segs, int height, int width, double origin_x,
                           double origin_y, double resolution, double radius):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] segs_arr = \
        np.ascontiguousarray(segs, dtype=np.float64).reshape(-1, 4)
    dist2 = np.full((height, width), np.inf)
    idx = np.full((height, width), -1, dtype=np.int32)
    cdef double[:, ::1] d2v = dist2
    cdef int[:, ::1] idxv = idx
    cdef double[:, ::1] sv = segs_arr
    cdef Py_ssize_t n = segs_arr.shape[0]
    cdef Py_ssize_t i, r, c, r0, r1, c0, c1
    cdef double x1, y1, x2, y2, dx, dy, l2, lox, hix, loy, hiy
    cdef double px, py, t, qx, qy, dd

    for i in range(n):
        x1 = sv[i, 0]; y1 = sv[i, 1]; x2 = sv[i, 2]; y2 = sv[i, 3]
        lox = (x1 if x1 < x2 else x2) - radius
        hix = (x1 if x1 > x2 else x2) + radius
        loy = (y1 if y1 < y2 else y2) - radius
        hiy = (y1 if y1 > y2 else y2) + radius
        c0 = <Py_ssize_t>ceil((lox - origin_x) / resolution - 0.5)
        c1 = <Py_ssize_t>floor((hix - origin_x) / resolution - 0.5)
        r0 = <Py_ssize_t>ceil((loy - origin_y) / resolution - 0.5)
        r1 = <Py_ssize_t>floor((hiy - origin_y) / resolution - 0.5)
        if c0 < 0: c0 = 0
        if r0 < 0: r0 = 0
        if c1 > width - 1: c1 = width - 1
        if r1 > height - 1: r1 = height - 1
        dx = x2 - x1; dy = y2 - y1
        l2 = dx * dx + dy * dy
        for r in range(r0, r1 + 1):
            py = origin_y + (r + 0.5) * resolution
            for c in range(c0, c1 + 1):
                px = origin_x + (c + 0.5) * resolution
                if l2 > 0.0:
                    t = ((px - x1) * dx + (py - y1) * dy) / l2
                    if t < 0.0: t = 0.0
                    elif t > 1.0: t = 1.0
                else:
                    t = 0.0
                qx = x1 + t * dx
                qy = y1 + t * dy
                dd = (px - qx) * (px - qx) + (py - qy) * (py - qy)
                if dd < d2v[r, c]:
                    d2v[r, c] = dd
                    idxv[r, c] = <int>i
    return dist2, idx


cdef void _envelope_1d(double* f, Py_ssize_t n, double* out,
                       Py_ssize_t* v, double* z) noexcept nogil:
    # lower envelope of parabolas i -> f[i] + (q - i)^2, skipping inf sites
    cdef Py_ssize_t k = -1
    cdef Py_ssize_t q, j
    cdef double s
    for q in range(n):
        if f[q] == INFINITY:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -INFINITY
            z[1] = INFINITY
            continue
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = INFINITY
    if k < 0:
        for q in range(n):
            out[q] = INFINITY
        return
    j = 0
    for q in range(n):
        while z[j + 1] < q:
            j += 1
        out[q] = (q - v[j]) * (q - v[j]) + f[v[j]]


def edt_sq(mask):
    """Exact squared Euclidean distance (px) to the nearest nonzero pixel."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = \
        np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0]
    cdef Py_ssize_t w = m.shape[1]
    out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef unsigned char[:, ::1] mv = m
    g = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] gv = g
    cdef Py_ssize_t r, c
    cdef double d

    # pass 1: per-row distance to the nearest foreground pixel in that row
    for r in range(h):
        d = INFINITY
        for c in range(w):
            if mv[r, c]:
                d = 0.0
            elif d != INFINITY:
                d = d + 1.0
            gv[r, c] = d
        d = INFINITY
        for c in range(w - 1, -1, -1):
            if mv[r, c]:
                d = 0.0
            elif d != INFINITY:
                d = d + 1.0
            if d < gv[r, c]:
                gv[r, c] = d

    # pass 2: parabola envelope down each column over g^2
    col = np.empty(h, dtype=np.float64)
    colout = np.empty(h, dtype=np.float64)
    vbuf = np.empty(h, dtype=np.intp)
    zbuf = np.empty(h + 1, dtype=np.float64)
    cdef double[::1] colv = col
    cdef double[::1] coloutv = colout
    cdef Py_ssize_t[::1] vv = vbuf
    cdef double[::1] zv = zbuf
    for c in range(w):
        for r in range(h):
            d = gv[r, c]
            colv[r] = d * d if d != INFINITY else INFINITY
        _envelope_1d(&colv[0], h, &coloutv[0], &vv[0], &zv[0])
        for r in range(h):
            ov[r, c] = coloutv[r]
    return out


def chamfer_sq(x, y):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xa = \
        np.ascontiguousarray(x, dtype=np.float64).reshape(-1, 2)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ya = \
        np.ascontiguousarray(y, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] xv = xa
    cdef double[:, ::1] yv = ya
    cdef Py_ssize_t n = xa.shape[0]
    cdef Py_ssize_t m = ya.shape[0]
    cdef Py_ssize_t i, j
    cdef double best, dx, dy, d, total = 0.0
    with nogil:
        for i in range(n):
            best = INFINITY
            for j in range(m):
                dx = xv[i, 0] - yv[j, 0]
                dy = xv[i, 1] - yv[j, 1]
                d = dx * dx + dy * dy
                if d < best:
                    best = d
            total += best
        for j in range(m):
            best = INFINITY
            for i in range(n):
                dx = xv[i, 0] - yv[j, 0]
                dy = xv[i, 1] - yv[j, 1]
                d = dx * dx + dy * dy
                if d < best:
                    best = d
            total += best
    return total


def zhang_suen(mask):
    """Morphological thinning to a 1-px 8-connected skeleton
    (simultaneous-deletion semantics)."""
    arr = np.pad((np.asarray(mask) != 0).astype(np.uint8), 1)
    flags = np.zeros_like(arr)
    cdef unsigned char[:, ::1] img = arr
    cdef unsigned char[:, ::1] fl = flags
    cdef Py_ssize_t h = arr.shape[0]
    cdef Py_ssize_t w = arr.shape[1]
    cdef Py_ssize_t r, c, k
    cdef int step, changed, b, a
    cdef int nb[9]

    changed = 1
    while changed:
        changed = 0
        for step in range(2):
            for r in range(1, h - 1):
                for c in range(1, w - 1):
                    if img[r, c] != 1:
                        continue
                    nb[0] = img[r - 1, c]      # P2 north
                    nb[1] = img[r - 1, c + 1]  # P3
                    nb[2] = img[r, c + 1]      # P4 east
                    nb[3] = img[r + 1, c + 1]  # P5
                    nb[4] = img[r + 1, c]      # P6 south
                    nb[5] = img[r + 1, c - 1]  # P7
                    nb[6] = img[r, c - 1]      # P8 west
                    nb[7] = img[r - 1, c - 1]  # P9
                    nb[8] = nb[0]
                    b = 0
                    a = 0
                    for k in range(8):
                        b += nb[k]
                        if nb[k] == 0 and nb[k + 1] == 1:
                            a += 1
                    if b < 2 or b > 6 or a != 1:
                        continue
                    if step == 0:
                        if nb[0] * nb[2] * nb[4] == 0 and nb[2] * nb[4] * nb[6] == 0:
                            fl[r, c] = 1
                    else:
                        if nb[0] * nb[2] * nb[6] == 0 and nb[0] * nb[4] * nb[6] == 0:
                            fl[r, c] = 1
            for r in range(1, h - 1):
                for c in range(1, w - 1):
                    if fl[r, c]:
                        img[r, c] = 0
                        fl[r, c] = 0
                        changed = 1
    return arr[1:-1, 1:-1]
