"""Pure-Python/numpy implementations of the geometric hot kernels.

Same contracts as the compiled extension in ``_compiled.pyx``; used when the
extension is unavailable or when ``TRITRANSFER_PURE_PYTHON`` is set. The two
implementations are kept in lockstep and compared by the parity test suite.
"""

from __future__ import annotations

import numpy as np


def clip_tri_tri(t, s):
    """Sutherland-Hodgman clip of CCW triangle ``s`` against CCW triangle ``t``.

    Returns the intersection polygon as an (k, 2) float array (k = 0 when the
    triangles are disjoint). Vertices follow the clip traversal order; near
    duplicate vertices are removed.
    """
    poly = _clip(tuple(map(tuple, np.asarray(t, dtype=float))),
                 [tuple(p) for p in np.asarray(s, dtype=float)])
    return np.array(poly, dtype=np.float64).reshape(len(poly), 2)


def _clip(t, poly):
    # clip the vertex loop `poly` against the three CCW half-planes of t
    for k in range(3):
        ax, ay = t[k]
        bx, by = t[(k + 1) % 3]
        ex, ey = bx - ax, by - ay
        out = []
        n = len(poly)
        if n == 0:
            return []
        px, py = poly[-1]
        dp = ex * (py - ay) - ey * (px - ax)
        for qx, qy in poly:
            dq = ex * (qy - ay) - ey * (qx - ax)
            if dq >= 0.0:
                if dp < 0.0:
                    f = dp / (dp - dq)
                    out.append((px + f * (qx - px), py + f * (qy - py)))
                out.append((qx, qy))
            elif dp >= 0.0:
                f = dp / (dp - dq)
                out.append((px + f * (qx - px), py + f * (qy - py)))
            px, py, dp = qx, qy, dq
        poly = out
    return _dedupe(poly)


def _dedupe(poly, rel=1e-24):
    if len(poly) < 2:
        return poly
    scale2 = max(abs(x) + abs(y) for x, y in poly) ** 2 + 1e-300
    out = []
    for p in poly:
        if not out or (p[0] - out[-1][0]) ** 2 + (p[1] - out[-1][1]) ** 2 > rel * scale2:
            out.append(p)
    while len(out) > 1 and (out[0][0] - out[-1][0]) ** 2 + (out[0][1] - out[-1][1]) ** 2 <= rel * scale2:
        out.pop()
    return out


def _poly_area(poly):
    a = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        a += x1 * y2 - x2 * y1
    return 0.5 * a


def locate_many(points, nx, ny, bbox, cell_start, cell_elems, binv, origin, eps):
    """Locate each point: containing element (lowest index wins) + barycentrics.

    Returns ``(elem, lam)``; ``elem[i] = -1`` marks a point outside the mesh.
    Candidate lists in ``cell_elems`` are ascending, which fixes the tie-break.
    """
    points = np.asarray(points, dtype=np.float64)
    npts = len(points)
    elem = np.full(npts, -1, dtype=np.int32)
    lam = np.zeros((npts, 3))

    xmin, ymin, xmax, ymax = bbox
    ix = np.clip(((points[:, 0] - xmin) / (xmax - xmin) * nx).astype(np.int64), 0, nx - 1)
    iy = np.clip(((points[:, 1] - ymin) / (ymax - ymin) * ny).astype(np.int64), 0, ny - 1)
    cell = ix * ny + iy

    order = np.argsort(cell, kind="stable")
    sorted_cell = cell[order]
    starts = np.flatnonzero(np.diff(sorted_cell, prepend=-1))
    ends = np.append(starts[1:], npts)
    for s0, e0 in zip(starts, ends):
        idx = order[s0:e0]
        c = sorted_cell[s0]
        cands = cell_elems[cell_start[c]:cell_start[c + 1]]
        if len(cands) == 0:
            continue
        rel = points[idx][:, None, :] - origin[cands][None, :, :]   # (p, c, 2)
        l01 = np.einsum("cij,pcj->pci", binv[cands], rel)
        lams = np.empty((len(idx), len(cands), 3))
        lams[:, :, :2] = l01
        lams[:, :, 2] = 1.0 - l01[:, :, 0] - l01[:, :, 1]
        inside = (lams >= -eps).all(axis=2)                          # (p, c)
        has = inside.any(axis=1)
        first = np.argmax(inside, axis=1)
        rows = np.flatnonzero(has)
        elem[idx[rows]] = cands[first[rows]]
        lam[idx[rows]] = lams[rows, first[rows]]
    return elem, lam


def find_intersections(tgt_coords, src_coords, src_adj, seeds, area_eps):
    """Adjacency BFS over the source mesh collecting positive-area clips.

    For each target element the BFS starts at ``seeds[t]``; neighbors of
    intersecting source elements are enqueued and non-intersecting ones are
    dropped (except while no intersection has been found yet, which covers
    nearest-element fallback seeds that sit outside the target).

    Returns flattened polygon storage ``(pair_t, pair_s, poly_off, verts)``
    with the pairs of each target element sorted by source element index.
    """
    tgt = [tuple(map(tuple, tc)) for tc in np.asarray(tgt_coords, dtype=float)]
    src = [[tuple(p) for p in sc] for sc in np.asarray(src_coords, dtype=float)]
    n_src = len(src)

    pair_t, pair_s, lengths, verts = [], [], [], []
    visited = np.full(n_src, -1, dtype=np.int64)
    for t_idx, t in enumerate(tgt):
        eps = area_eps[t_idx]
        found = []
        queue = [int(seeds[t_idx])]
        visited[queue[0]] = t_idx
        qi = 0
        any_hit = False
        while qi < len(queue):
            s_idx = queue[qi]
            qi += 1
            poly = _clip(t, src[s_idx])
            area = _poly_area(poly) if len(poly) >= 3 else 0.0
            hit = area > 0.0
            if area > eps:
                found.append((s_idx, poly))
                any_hit = True
            if hit or not any_hit:
                for nb in src_adj[s_idx]:
                    if nb >= 0 and visited[nb] != t_idx:
                        visited[nb] = t_idx
                        queue.append(int(nb))
        found.sort(key=lambda item: item[0])
        for s_idx, poly in found:
            pair_t.append(t_idx)
            pair_s.append(s_idx)
            lengths.append(len(poly))
            verts.extend(poly)

    poly_off = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=poly_off[1:])
    return (np.array(pair_t, dtype=np.int32),
            np.array(pair_s, dtype=np.int32),
            poly_off,
            np.array(verts, dtype=np.float64).reshape(-1, 2))
