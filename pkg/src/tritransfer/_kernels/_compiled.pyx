# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometric hot kernels (triangle clipping, BFS intersection
search, grid point localization).

Mirrors the pure implementations in ``_pure.py``; the parity test suite keeps
the two in lockstep.
"""

import numpy as np

from libc.math cimport fabs


cdef int _clip_loop(double* t, double* poly, int n, double* out) noexcept nogil:
    """Sutherland-Hodgman passes against the three CCW half-planes of t.

    ``poly``/``out`` are distinct scratch buffers of interleaved xy pairs
    (capacity 16 vertices); returns the vertex count of the clipped loop,
    which ends up in ``out``.
    """
    cdef double* cur = poly
    cdef double* nxt = out
    cdef double* tmp
    cdef int k, i, m
    cdef double ax, ay, ex, ey, px, py, qx, qy, dp, dq, f

    for k in range(3):
        ax = t[2 * k]
        ay = t[2 * k + 1]
        ex = t[2 * ((k + 1) % 3)] - ax
        ey = t[2 * ((k + 1) % 3) + 1] - ay
        m = 0
        if n == 0:
            break
        px = cur[2 * (n - 1)]
        py = cur[2 * (n - 1) + 1]
        dp = ex * (py - ay) - ey * (px - ax)
        for i in range(n):
            qx = cur[2 * i]
            qy = cur[2 * i + 1]
            dq = ex * (qy - ay) - ey * (qx - ax)
            if dq >= 0.0:
                if dp < 0.0:
                    f = dp / (dp - dq)
                    nxt[2 * m] = px + f * (qx - px)
                    nxt[2 * m + 1] = py + f * (qy - py)
                    m += 1
                nxt[2 * m] = qx
                nxt[2 * m + 1] = qy
                m += 1
            elif dp >= 0.0:
                f = dp / (dp - dq)
                nxt[2 * m] = px + f * (qx - px)
                nxt[2 * m + 1] = py + f * (qy - py)
                m += 1
            px = qx
            py = qy
            dp = dq
        n = m
        tmp = cur
        cur = nxt
        nxt = tmp
    if cur != out:
        for i in range(2 * n):
            out[i] = cur[i]
    return n


cdef int _dedupe(double* poly, int n) noexcept nogil:
    cdef double rel = 1e-24
    cdef double scale2 = 1e-300
    cdef double s
    cdef int i, m
    for i in range(n):
        s = fabs(poly[2 * i]) + fabs(poly[2 * i + 1])
        if s * s > scale2:
            scale2 = s * s
    m = 0
    for i in range(n):
        if m == 0 or ((poly[2 * i] - poly[2 * (m - 1)]) ** 2
                      + (poly[2 * i + 1] - poly[2 * (m - 1) + 1]) ** 2) > rel * scale2:
            poly[2 * m] = poly[2 * i]
            poly[2 * m + 1] = poly[2 * i + 1]
            m += 1
    while m > 1 and ((poly[0] - poly[2 * (m - 1)]) ** 2
                     + (poly[1] - poly[2 * (m - 1) + 1]) ** 2) <= rel * scale2:
        m -= 1
    return m


cdef double _poly_area(double* poly, int n) noexcept nogil:
    cdef double a = 0.0
    cdef int i, j
    for i in range(n):
        j = (i + 1) % n
        a += poly[2 * i] * poly[2 * j + 1] - poly[2 * j] * poly[2 * i + 1]
    return 0.5 * a


cdef int _clip_tris(const double[:, :] t, const double[:, :] s, double* out) noexcept nogil:
    cdef double tv[6]
    cdef double sv[32]
    cdef int i, n
    for i in range(3):
        tv[2 * i] = t[i, 0]
        tv[2 * i + 1] = t[i, 1]
        sv[2 * i] = s[i, 0]
        sv[2 * i + 1] = s[i, 1]
    n = _clip_loop(tv, sv, 3, out)
    return _dedupe(out, n)


def clip_tri_tri(t, s):
    """Clip CCW triangle ``s`` against CCW triangle ``t``; returns (k, 2) array."""
    cdef double out[32]
    cdef const double[:, :] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:, :] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef int n = _clip_tris(tv, sv, out)
    res = np.empty((n, 2), dtype=np.float64)
    cdef int i
    for i in range(n):
        res[i, 0] = out[2 * i]
        res[i, 1] = out[2 * i + 1]
    return res


def locate_many(points, int nx, int ny, bbox, cell_start, cell_elems,
                binv, origin, double eps):
    """Containing element (lowest index wins) + barycentrics per query point."""
    cdef const double[:, :] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[:] cstart = np.ascontiguousarray(cell_start, dtype=np.int64)
    cdef const int[:] celems = np.ascontiguousarray(cell_elems, dtype=np.int32)
    cdef const double[:, :, :] bv = np.ascontiguousarray(binv, dtype=np.float64)
    cdef const double[:, :] org = np.ascontiguousarray(origin, dtype=np.float64)
    cdef double xmin = bbox[0], ymin = bbox[1], xmax = bbox[2], ymax = bbox[3]

    cdef Py_ssize_t npts = pts.shape[0]
    elem_arr = np.full(npts, -1, dtype=np.int32)
    lam_arr = np.zeros((npts, 3), dtype=np.float64)
    cdef int[:] elem = elem_arr
    cdef double[:, :] lam = lam_arr

    cdef Py_ssize_t p
    cdef long long c, j
    cdef int ix, iy, e
    cdef double x, y, rx, ry, l0, l1, l2
    with nogil:
        for p in range(npts):
            x = pts[p, 0]
            y = pts[p, 1]
            ix = <int>((x - xmin) / (xmax - xmin) * nx)
            iy = <int>((y - ymin) / (ymax - ymin) * ny)
            if ix < 0:
                ix = 0
            if ix > nx - 1:
                ix = nx - 1
            if iy < 0:
                iy = 0
            if iy > ny - 1:
                iy = ny - 1
            c = <long long>ix * ny + iy
            for j in range(cstart[c], cstart[c + 1]):
                e = celems[j]
                rx = x - org[e, 0]
                ry = y - org[e, 1]
                l0 = bv[e, 0, 0] * rx + bv[e, 0, 1] * ry
                l1 = bv[e, 1, 0] * rx + bv[e, 1, 1] * ry
                l2 = 1.0 - l0 - l1
                if l0 >= -eps and l1 >= -eps and l2 >= -eps:
                    elem[p] = e
                    lam[p, 0] = l0
                    lam[p, 1] = l1
                    lam[p, 2] = l2
                    break
    return elem_arr, lam_arr


def find_intersections(tgt_coords, src_coords, src_adj, seeds, area_eps):
    """Adjacency BFS over the source mesh collecting positive-area clips.

    Same contract as the pure fallback: per-target pairs sorted by source
    index, flattened polygon vertex storage.
    """
    cdef const double[:, :, :] tgt = np.ascontiguousarray(tgt_coords, dtype=np.float64)
    cdef const double[:, :, :] src = np.ascontiguousarray(src_coords, dtype=np.float64)
    cdef const int[:, :] adj = np.ascontiguousarray(src_adj, dtype=np.int32)
    cdef const int[:] seed = np.ascontiguousarray(seeds, dtype=np.int32)
    cdef const double[:] eps = np.ascontiguousarray(area_eps, dtype=np.float64)

    cdef Py_ssize_t n_tgt = tgt.shape[0]
    cdef Py_ssize_t n_src = src.shape[0]

    visited_arr = np.full(n_src, -1, dtype=np.int64)
    queue_arr = np.empty(n_src, dtype=np.int32)
    cdef long long[:] visited = visited_arr
    cdef int[:] queue = queue_arr

    # per-target scratch for found pairs (sorted by s before emission)
    fs_arr = np.empty(n_src, dtype=np.int32)
    fn_arr = np.empty(n_src, dtype=np.int32)
    fverts_arr = np.empty((n_src, 16), dtype=np.float64)
    cdef int[:] fs = fs_arr
    cdef int[:] fn = fn_arr
    cdef double[:, :] fverts = fverts_arr

    cdef long long cap_pairs = 1024, cap_verts = 8192
    pair_t_arr = np.empty(cap_pairs, dtype=np.int32)
    pair_s_arr = np.empty(cap_pairs, dtype=np.int32)
    poly_len_arr = np.empty(cap_pairs, dtype=np.int64)
    verts_arr = np.empty((cap_verts, 2), dtype=np.float64)
    cdef long long n_pairs = 0, n_verts = 0

    cdef double out[32]
    cdef double area
    cdef int qi, qn, s_idx, nb, k, nfound, nv, i, j, key_s
    cdef int any_hit, hit
    cdef double key_v[16]
    cdef int key_n
    cdef Py_ssize_t t_idx

    for t_idx in range(n_tgt):
        nfound = 0
        qn = 0
        queue[qn] = seed[t_idx]
        visited[seed[t_idx]] = t_idx
        qn += 1
        qi = 0
        any_hit = 0
        while qi < qn:
            s_idx = queue[qi]
            qi += 1
            nv = _clip_tris(tgt[t_idx], src[s_idx], out)
            area = _poly_area(out, nv) if nv >= 3 else 0.0
            hit = 1 if area > 0.0 else 0
            if area > eps[t_idx]:
                fs[nfound] = s_idx
                fn[nfound] = nv
                for i in range(2 * nv):
                    fverts[nfound, i] = out[i]
                nfound += 1
                any_hit = 1
            if hit or not any_hit:
                for k in range(3):
                    nb = adj[s_idx, k]
                    if nb >= 0 and visited[nb] != t_idx:
                        visited[nb] = t_idx
                        queue[qn] = nb
                        qn += 1

        # insertion sort by source index (nfound is small)
        for i in range(1, nfound):
            key_s = fs[i]
            key_n = fn[i]
            for k in range(2 * key_n):
                key_v[k] = fverts[i, k]
            j = i - 1
            while j >= 0 and fs[j] > key_s:
                fs[j + 1] = fs[j]
                fn[j + 1] = fn[j]
                for k in range(2 * fn[j]):
                    fverts[j + 1, k] = fverts[j, k]
                j -= 1
            fs[j + 1] = key_s
            fn[j + 1] = key_n
            for k in range(2 * key_n):
                fverts[j + 1, k] = key_v[k]

        # grow output buffers as needed
        while n_pairs + nfound > cap_pairs:
            cap_pairs *= 2
            pair_t_arr = np.concatenate([pair_t_arr, np.empty(cap_pairs // 2, dtype=np.int32)])
            pair_s_arr = np.concatenate([pair_s_arr, np.empty(cap_pairs // 2, dtype=np.int32)])
            poly_len_arr = np.concatenate([poly_len_arr, np.empty(cap_pairs // 2, dtype=np.int64)])
        for i in range(nfound):
            pair_t_arr[n_pairs] = t_idx
            pair_s_arr[n_pairs] = fs[i]
            poly_len_arr[n_pairs] = fn[i]
            n_pairs += 1
            while n_verts + fn[i] > cap_verts:
                cap_verts *= 2
                verts_arr = np.concatenate(
                    [verts_arr, np.empty((cap_verts // 2, 2), dtype=np.float64)])
            for k in range(fn[i]):
                verts_arr[n_verts, 0] = fverts[i, 2 * k]
                verts_arr[n_verts, 1] = fverts[i, 2 * k + 1]
                n_verts += 1

    poly_off = np.zeros(n_pairs + 1, dtype=np.int64)
    np.cumsum(poly_len_arr[:n_pairs], out=poly_off[1:])
    return (pair_t_arr[:n_pairs].copy(), pair_s_arr[:n_pairs].copy(),
            poly_off, verts_arr[:n_verts].copy())
