"""Point localization on a triangle mesh via a uniform background grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mesh import TriMesh

#: barycentric slack for point-in-element tests
EPS_LOC = 1e-12

OUTSIDE = -1


@dataclass
class UniformGridLocator:
    """Uniform grid of candidate-element lists over the mesh bounding box.

    Elements are binned into every grid cell their bounding box overlaps.
    Immutable after construction; ``locate``/``nearest_element`` are pure and
    safe to call concurrently.
    """

    mesh: TriMesh
    nx: int
    ny: int
    cell_start: np.ndarray  # (nx*ny + 1,) int64, CSR offsets
    cell_elems: np.ndarray  # int32, ascending within each cell

    @classmethod
    def build(cls, mesh: TriMesh, nx: int | None = None,
              ny: int | None = None) -> "UniformGridLocator":
        """Grid sized as int(L * sqrt(n_elems)) cells per axis by default,
        with L the normalized characteristic domain size (longest bbox edge)."""
        if nx is None:
            nx = max(1, int(np.sqrt(mesh.n_elems)))
        if ny is None:
            ny = nx
        xmin, ymin, xmax, ymax = mesh.bbox
        coords = mesh.elem_coords
        ex0 = np.clip(((coords[:, :, 0].min(axis=1) - xmin) / (xmax - xmin) * nx)
                      .astype(np.int64), 0, nx - 1)
        ex1 = np.clip(((coords[:, :, 0].max(axis=1) - xmin) / (xmax - xmin) * nx)
                      .astype(np.int64), 0, nx - 1)
        ey0 = np.clip(((coords[:, :, 1].min(axis=1) - ymin) / (ymax - ymin) * ny)
                      .astype(np.int64), 0, ny - 1)
        ey1 = np.clip(((coords[:, :, 1].max(axis=1) - ymin) / (ymax - ymin) * ny)
                      .astype(np.int64), 0, ny - 1)

        counts = (ex1 - ex0 + 1) * (ey1 - ey0 + 1)
        total = int(counts.sum())
        cells = np.empty(total, dtype=np.int64)
        elems = np.empty(total, dtype=np.int32)
        pos = 0
        for e in range(mesh.n_elems):
            for ix in range(ex0[e], ex1[e] + 1):
                base = ix * ny
                for iy in range(ey0[e], ey1[e] + 1):
                    cells[pos] = base + iy
                    elems[pos] = e
                    pos += 1
        # element ids ascend within each cell (stable sort preserves insertion order)
        order = np.argsort(cells, kind="stable")
        cells, elems = cells[order], elems[order]
        cell_start = np.zeros(nx * ny + 1, dtype=np.int64)
        np.add.at(cell_start[1:], cells, 1)
        np.cumsum(cell_start, out=cell_start)
        loc = cls(mesh, nx, ny, cell_start, elems)
        loc.cell_start.flags.writeable = False
        loc.cell_elems.flags.writeable = False
        return loc

    def locate_many(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized localization.

        Returns ``(elem, lam)``; ``elem[i] == OUTSIDE`` when no element
        contains point i within the barycentric slack. Ties on shared edges
        resolve to the lowest element index.
        """
        binv, origin = self.mesh._bary_inv
        return _kernels.locate_many(
            np.ascontiguousarray(points, dtype=np.float64),
            self.nx, self.ny, self.mesh.bbox,
            self.cell_start, self.cell_elems,
            np.ascontiguousarray(binv), np.ascontiguousarray(origin), EPS_LOC)

    def locate(self, point) -> tuple[int, np.ndarray] | None:
        """Single-point localization; None when the point is outside."""
        elem, lam = self.locate_many(np.asarray(point, dtype=np.float64)[None, :])
        if elem[0] == OUTSIDE:
            return None
        return int(elem[0]), lam[0]

    def nearest_element(self, point) -> int:
        """Element with the nearest centroid, searched over expanding rings of
        grid cells; deterministic (lowest index on distance ties)."""
        x, y = float(point[0]), float(point[1])
        xmin, ymin, xmax, ymax = self.mesh.bbox
        ix = int(np.clip((x - xmin) / (xmax - xmin) * self.nx, 0, self.nx - 1))
        iy = int(np.clip((y - ymin) / (ymax - ymin) * self.ny, 0, self.ny - 1))

        best_elem, best_d2 = -1, np.inf
        first_hit_ring = -1
        max_ring = max(self.nx, self.ny)
        for ring in range(max_ring + 1):
            # one extra ring after the first hit covers centroids straddling cells
            if first_hit_ring >= 0 and ring > first_hit_ring + 1:
                break
            for cx in range(ix - ring, ix + ring + 1):
                for cy in range(iy - ring, iy + ring + 1):
                    if max(abs(cx - ix), abs(cy - iy)) != ring:
                        continue
                    if not (0 <= cx < self.nx and 0 <= cy < self.ny):
                        continue
                    c = cx * self.ny + cy
                    cands = self.cell_elems[self.cell_start[c]:self.cell_start[c + 1]]
                    for e in cands:
                        d2 = ((self.mesh.centroids[e, 0] - x) ** 2
                              + (self.mesh.centroids[e, 1] - y) ** 2)
                        if d2 < best_d2 or (d2 == best_d2 and e < best_elem):
                            best_d2, best_elem = d2, int(e)
                        if first_hit_ring < 0:
                            first_hit_ring = ring
        return best_elem

    def nearest_many(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.nearest_element(p) for p in points], dtype=np.int32)
