# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled block-matching kernels (exhaustive search and ARPS).

Mirrors ``motionshot._pure`` exactly, including tie-breaking and the
order in which search points are counted. The SAD loops run without the
GIL, so callers may fan frame pairs out across threads.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport abs as iabs
from libc.string cimport memset

cnp.import_array()

cdef int ARPS_MAX_REFINE = 64  # safety cap on unit-rood rounds


cdef inline long long block_sad(const unsigned char[:, ::1] cur,
                                const unsigned char[:, ::1] ref,
                                Py_ssize_t r, Py_ssize_t c,
                                int x, int y, int block) noexcept nogil:
    cdef long long acc = 0
    cdef Py_ssize_t u, v
    cdef const unsigned char* a
    cdef const unsigned char* b
    for u in range(block):
        a = &cur[r + u, c]
        b = &ref[r + y + u, c + x]
        for v in range(block):
            acc += iabs(<int>a[v] - <int>b[v])
    return acc


cdef inline bint better(long long sad, int x, int y,
                        long long bsad, int bx, int by) noexcept nogil:
    """Tie-break order: SAD, then |x|+|y|, then y, then x."""
    cdef int l1, bl1
    if sad != bsad:
        return sad < bsad
    l1 = iabs(x) + iabs(y)
    bl1 = iabs(bx) + iabs(by)
    if l1 != bl1:
        return l1 < bl1
    if y != by:
        return y < by
    return x < bx


def es_field(const unsigned char[:, ::1] cur, const unsigned char[:, ::1] ref,
             int block, int p):
    cdef Py_ssize_t h = cur.shape[0], w = cur.shape[1]
    cdef Py_ssize_t n = h // block, m = w // block
    vec_arr = np.zeros((n, m, 2), dtype=np.int32)
    cost_arr = np.zeros((n, m), dtype=np.int64)
    pts_arr = np.zeros((n, m), dtype=np.int32)
    cdef int[:, :, ::1] vec = vec_arr
    cdef long long[:, ::1] cost = cost_arr
    cdef int[:, ::1] pts = pts_arr
    cdef Py_ssize_t i, j, r, c
    cdef int x, y, bx, by, count
    cdef long long sad, bsad
    with nogil:
        for i in range(n):
            r = i * block
            for j in range(m):
                c = j * block
                bsad = -1
                bx = 0
                by = 0
                count = 0
                for y in range(-p, p + 1):
                    if r + y < 0 or r + y + block > h:
                        continue
                    for x in range(-p, p + 1):
                        if c + x < 0 or c + x + block > w:
                            continue
                        sad = block_sad(cur, ref, r, c, x, y, block)
                        count += 1
                        if bsad < 0 or better(sad, x, y, bsad, bx, by):
                            bsad = sad
                            bx = x
                            by = y
                vec[i, j, 0] = bx
                vec[i, j, 1] = by
                cost[i, j] = bsad
                pts[i, j] = count
    return vec_arr, cost_arr, pts_arr


cdef struct Search:
    Py_ssize_t r, c, h, w
    int block, p, side, count
    long long bsad
    int bx, by


cdef inline void probe(Search* s, const unsigned char[:, ::1] cur,
                       const unsigned char[:, ::1] ref,
                       unsigned char* seen,
                       int x, int y) noexcept nogil:
    cdef int k
    cdef long long sad
    if x < -s.p or x > s.p or y < -s.p or y > s.p:
        return
    if s.r + y < 0 or s.r + y + s.block > s.h or s.c + x < 0 or s.c + x + s.block > s.w:
        return
    k = (y + s.p) * s.side + (x + s.p)
    if seen[k]:
        return
    sad = block_sad(cur, ref, s.r, s.c, x, y, s.block)
    seen[k] = 1
    s.count += 1
    if s.bsad < 0 or better(sad, x, y, s.bsad, s.bx, s.by):
        s.bsad = sad
        s.bx = x
        s.by = y


def arps_field(const unsigned char[:, ::1] cur, const unsigned char[:, ::1] ref,
               int block, int p):
    cdef Py_ssize_t h = cur.shape[0], w = cur.shape[1]
    cdef Py_ssize_t n = h // block, m = w // block
    cdef int side = 2 * p + 1
    vec_arr = np.zeros((n, m, 2), dtype=np.int32)
    cost_arr = np.zeros((n, m), dtype=np.int64)
    pts_arr = np.zeros((n, m), dtype=np.int32)
    seen_arr = np.zeros(side * side, dtype=np.uint8)
    cdef int[:, :, ::1] vec = vec_arr
    cdef long long[:, ::1] cost = cost_arr
    cdef int[:, ::1] pts = pts_arr
    cdef unsigned char[::1] seen = seen_arr
    cdef Search s
    cdef Py_ssize_t i, j
    cdef int px, py, step, it, cx, cy
    s.h = h
    s.w = w
    s.block = block
    s.p = p
    s.side = side
    with nogil:
        for i in range(n):
            px = 0
            py = 0
            s.r = i * block
            for j in range(m):
                s.c = j * block
                memset(&seen[0], 0, side * side)
                s.count = 0
                s.bsad = -1
                s.bx = 0
                s.by = 0

                step = 0
                if j > 0:
                    step = iabs(px) if iabs(px) > iabs(py) else iabs(py)
                if step == 0:
                    step = 2
                probe(&s, cur, ref, &seen[0], 0, 0)
                probe(&s, cur, ref, &seen[0], step, 0)
                probe(&s, cur, ref, &seen[0], -step, 0)
                probe(&s, cur, ref, &seen[0], 0, step)
                probe(&s, cur, ref, &seen[0], 0, -step)
                if j > 0:
                    probe(&s, cur, ref, &seen[0], px, py)

                # the running best is always the rood center: each round
                # compares the center with its four neighbours only
                for it in range(ARPS_MAX_REFINE):
                    cx = s.bx
                    cy = s.by
                    probe(&s, cur, ref, &seen[0], cx + 1, cy)
                    probe(&s, cur, ref, &seen[0], cx - 1, cy)
                    probe(&s, cur, ref, &seen[0], cx, cy + 1)
                    probe(&s, cur, ref, &seen[0], cx, cy - 1)
                    if s.bx == cx and s.by == cy:
                        break

                vec[i, j, 0] = s.bx
                vec[i, j, 1] = s.by
                cost[i, j] = s.bsad
                pts[i, j] = s.count
                px = s.bx
                py = s.by
    return vec_arr, cost_arr, pts_arr
