"""Local supermesh construction and deterministic load-vector assembly.

For each target element, intersecting source elements are found by a
breadth-first traversal of the source adjacency graph seeded by centroid
localization; each overlap is clipped to a convex polygon, CCW-sorted,
fan-triangulated from an anchor vertex, and integrated by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CoverageGap
from .fem import NodalField
from .locate import OUTSIDE, UniformGridLocator
from .mesh import TriMesh
from .quadrature import QuadratureRule, triangle_rule

#: sliver cutoff relative to the target element area
SLIVER_REL = 1e-14

#: per-element coverage shortfall that signals non-matching domains
COVERAGE_REL = 1e-6


@dataclass
class ConvexPolygon:
    """Ordered CCW vertex loop of a clipped intersection region."""

    vertices: np.ndarray  # (k, 2)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        return float(0.5 * np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))

    def ccw_sorted(self) -> "ConvexPolygon":
        """Vertices re-ordered by angle about the vertex centroid."""
        v = self.vertices
        c = v.mean(axis=0)
        ang = np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0])
        return ConvexPolygon(v[np.argsort(ang, kind="stable")])

    def fan_triangles(self) -> np.ndarray:
        """(k-2, 3, 2) sub-triangles fanned from the anchor (first) vertex."""
        v = self.ccw_sorted().vertices
        k = len(v)
        tris = np.empty((k - 2, 3, 2))
        tris[:, 0] = v[0]
        tris[:, 1] = v[1:k - 1]
        tris[:, 2] = v[2:k]
        return tris


def clip_triangles(t: np.ndarray, s: np.ndarray,
                   area_eps: float | None = None) -> ConvexPolygon | None:
    """Clip CCW triangle ``s`` against CCW triangle ``t``.

    Returns None (Empty) when the overlap area is at or below ``area_eps``
    (default: SLIVER_REL times the area of ``t``).
    """
    t = np.asarray(t, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    verts = _kernels.clip_tri_tri(t, s)
    if len(verts) < 3:
        return None
    poly = ConvexPolygon(verts)
    if area_eps is None:
        area_t = 0.5 * abs((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1])
                           - (t[2, 0] - t[0, 0]) * (t[1, 1] - t[0, 1]))
        area_eps = SLIVER_REL * area_t
    if poly.area <= area_eps:
        return None
    return poly


@dataclass
class IntersectionSet:
    """All positive-area target/source element overlaps of a mesh pair.

    Pairs are stored flattened, grouped by target element (ascending source
    index within each group); computed once per mesh pair and reused by load
    assembly and the supermesh error metrics.
    """

    target: TriMesh
    source: TriMesh
    pair_t: np.ndarray    # (P,) int32 target element per pair
    pair_s: np.ndarray    # (P,) int32 source element per pair
    poly_off: np.ndarray  # (P+1,) int64 offsets into verts
    verts: np.ndarray     # (V, 2) polygon vertices in clip order
    _quad_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_pairs(self) -> int:
        return len(self.pair_t)

    def polygon(self, p: int) -> ConvexPolygon:
        return ConvexPolygon(self.verts[self.poly_off[p]:self.poly_off[p + 1]])

    def pairs_for(self, t: int) -> list[tuple[int, ConvexPolygon]]:
        idx = np.flatnonzero(self.pair_t == t)
        return [(int(self.pair_s[p]), self.polygon(p)) for p in idx]

    def sources_for(self, t: int) -> np.ndarray:
        return self.pair_s[self.pair_t == t]

    def pair_areas(self) -> np.ndarray:
        """Shoelace area of every intersection polygon, vectorized."""
        v = self.verts
        nv = np.diff(self.poly_off)
        nxt = np.arange(1, len(v) + 1)
        ends = self.poly_off[1:] - 1
        nxt[ends] = self.poly_off[:-1]
        cross = v[:, 0] * v[nxt, 1] - v[nxt, 0] * v[:, 1]
        return 0.5 * np.add.reduceat(cross, self.poly_off[:-1]) * (nv > 0)

    def per_target_area(self) -> np.ndarray:
        return np.bincount(self.pair_t, weights=self.pair_areas(),
                           minlength=self.target.n_elems)

    def quad_points(self, rule: QuadratureRule | None = None) -> dict:
        """Quadrature decomposition over all intersection polygons.

        Polygons are CCW-sorted about their vertex centroid, fan-triangulated
        from the first sorted vertex, and the rule is applied on every
        sub-triangle. Returns arrays ``q_t``, ``q_s`` (pair elements per
        point), ``q_xy`` (global coordinates), and ``q_w`` (weights summing to
        the supermesh area). Cached per rule degree.
        """
        if rule is None:
            rule = triangle_rule(2)
        if rule.degree in self._quad_cache:
            return self._quad_cache[rule.degree]

        # CCW sort within each polygon by angle about the vertex centroid
        nv = np.diff(self.poly_off)
        vert_poly = np.repeat(np.arange(self.n_pairs), nv)
        cent = np.empty((self.n_pairs, 2))
        for d in range(2):
            cent[:, d] = np.add.reduceat(self.verts[:, d], self.poly_off[:-1]) / nv
        ang = np.arctan2(self.verts[:, 1] - cent[vert_poly, 1],
                         self.verts[:, 0] - cent[vert_poly, 0])
        order = np.lexsort((ang, vert_poly))
        sv = self.verts[order]

        # anchor-fan triangulation: polygon p gives nv[p]-2 sub-triangles
        ntri = nv - 2
        tri_poly = np.repeat(np.arange(self.n_pairs), ntri)
        j = np.arange(ntri.sum()) - np.repeat(np.cumsum(ntri) - ntri, ntri)
        anchor = self.poly_off[:-1][tri_poly]
        a = sv[anchor]
        b = sv[anchor + 1 + j]
        c = sv[anchor + 2 + j]
        sub_area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                          - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))

        lam = rule.points  # (q, 3)
        q_xy = (a[:, None, :] * lam[None, :, 0, None]
                + b[:, None, :] * lam[None, :, 1, None]
                + c[:, None, :] * lam[None, :, 2, None]).reshape(-1, 2)
        q_w = (sub_area[:, None] * rule.weights[None, :]).reshape(-1)
        nq = len(rule.weights)
        out = {
            "q_t": np.repeat(self.pair_t[tri_poly], nq),
            "q_s": np.repeat(self.pair_s[tri_poly], nq),
            "q_xy": q_xy,
            "q_w": q_w,
        }
        self._quad_cache[rule.degree] = out
        return out


def find_intersections(target: TriMesh, source: TriMesh,
                       source_locator: UniformGridLocator | None = None,
                       check_coverage: bool = True) -> IntersectionSet:
    """BFS intersection search for every target element.

    Seeds come from centroid localization on the source mesh (nearest element
    as fallback for centroids that miss due to floating-point boundary
    mismatch). Raises ``CoverageGap`` when a target element is not covered by
    its intersections within COVERAGE_REL, which signals non-matching domains.
    """
    if source_locator is None:
        source_locator = UniformGridLocator.build(source)
    seeds, _ = source_locator.locate_many(target.centroids)
    missing = np.flatnonzero(seeds == OUTSIDE)
    for t in missing:
        seeds[t] = source_locator.nearest_element(target.centroids[t])

    area_eps = SLIVER_REL * target.elem_areas
    pair_t, pair_s, poly_off, verts = _kernels.find_intersections(
        target.elem_coords, source.elem_coords, source.elem_adjacency,
        seeds.astype(np.int32), area_eps)
    iset = IntersectionSet(target, source, pair_t, pair_s, poly_off, verts)

    if check_coverage:
        covered = iset.per_target_area()
        rel = covered / target.elem_areas
        worst = int(np.argmin(rel))
        if rel[worst] < 1.0 - COVERAGE_REL:
            raise CoverageGap(
                f"target element {worst} covered only to relative area "
                f"{rel[worst]:.12f}")
    return iset


def assemble_load_intersection(target: TriMesh, source_field: NodalField,
                               intersections: IntersectionSet,
                               rule: QuadratureRule | None = None) -> np.ndarray:
    """Load vector b_k = integral of (source field * target basis k).

    Integrates over the cached supermesh quadrature points; the source field
    is evaluated through the exact barycentrics of the clip pair's source
    element (no re-localization), so the result is exact up to the quadrature
    degree (degree 2 is exact for products of linears). Accumulation runs in
    fixed pair order and is bitwise reproducible.
    """
    if rule is None:
        rule = triangle_rule(2)
    qp = intersections.quad_points(rule)
    lam_t = target.barycentric(qp["q_t"], qp["q_xy"])
    lam_s = source_field.mesh.barycentric(qp["q_s"], qp["q_xy"])
    f = np.einsum("ki,ki->k", source_field.coeffs[source_field.mesh.elements[qp["q_s"]]],
                  lam_s)
    b = np.zeros(target.n_nodes)
    np.add.at(b, target.elements[qp["q_t"]], (qp["q_w"] * f)[:, None] * lam_t)
    return b


def load_matrix_intersection(target: TriMesh, source: TriMesh,
                             intersections: IntersectionSet,
                             rule: QuadratureRule | None = None):
    """Sparse operator R with b = R @ (source coefficients).

    Algebraically identical to ``assemble_load_intersection``; used to make
    repeated transfers over a fixed mesh pair cheap.
    """
    import scipy.sparse as sp

    if rule is None:
        rule = triangle_rule(2)
    qp = intersections.quad_points(rule)
    lam_t = target.barycentric(qp["q_t"], qp["q_xy"])
    lam_s = source.barycentric(qp["q_s"], qp["q_xy"])
    rows = np.repeat(target.elements[qp["q_t"]], 3, axis=1).reshape(-1)
    cols = np.tile(source.elements[qp["q_s"]], (1, 3)).reshape(-1)
    vals = (qp["q_w"][:, None, None] * lam_t[:, :, None]
            * lam_s[:, None, :]).reshape(-1)
    mat = sp.coo_matrix((vals, (rows, cols)),
                        shape=(target.n_nodes, source.n_nodes)).tocsr()
    mat.sum_duplicates()
    return mat


def dump_supermesh_msh(intersections: IntersectionSet, path) -> None:
    """Debug dump of the supermesh sub-triangles as a Gmsh MSH 2.2 file."""
    tris = []
    for p in range(intersections.n_pairs):
        tris.append(intersections.polygon(p).fan_triangles())
    tris = np.concatenate(tris) if tris else np.empty((0, 3, 2))
    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write(f"$Nodes\n{3 * len(tris)}\n")
        nid = 1
        for tri in tris:
            for x, y in tri:
                fh.write(f"{nid} {float(x)!r} {float(y)!r} 0\n")
                nid += 1
        fh.write("$EndNodes\n")
        fh.write(f"$Elements\n{len(tris)}\n")
        for e in range(len(tris)):
            a = 3 * e + 1
            fh.write(f"{e + 1} 2 2 0 0 {a} {a + 1} {a + 2}\n")
        fh.write("$EndElements\n")
