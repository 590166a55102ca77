"""Immutable 2D linear triangular meshes: generation, Gmsh I/O, adjacency."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DegenerateElement,
    EmptyMesh,
    InvalidParameter,
    NonManifold,
    ParseError,
)

NO_NEIGHBOR = -1

#: area threshold relative to (bbox diagonal)^2 below which a triangle is degenerate
_DEGENERATE_REL = 1e-14


def _signed_areas(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    a = nodes[elements[:, 0]]
    b = nodes[elements[:, 1]]
    c = nodes[elements[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def build_adjacency(elements: np.ndarray, *, _edges_out: list | None = None) -> np.ndarray:
    """Element-to-element adjacency across shared edges.

    Returns an ``(n_elems, 3)`` int32 array where entry ``[e, k]`` is the
    element sharing the edge ``(elements[e, k], elements[e, (k+1) % 3])``,
    or ``NO_NEIGHBOR`` for a boundary edge.

    Raises ``NonManifold`` if any edge is shared by more than two elements.
    """
    elements = np.asarray(elements, dtype=np.int32)
    n_elems = len(elements)
    # each element contributes its 3 directed edges; undirected key = sorted pair
    edges = elements[:, [0, 1, 1, 2, 2, 0]].reshape(n_elems * 3, 2)
    keys = np.sort(edges, axis=1)
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    sk = keys[order]
    same = np.all(sk[1:] == sk[:-1], axis=1)
    # run lengths of identical keys; any run of length > 2 is non-manifold
    boundaries = np.flatnonzero(~same)
    run_ends = np.concatenate([boundaries, [len(sk) - 1]])
    run_starts = np.concatenate([[0], boundaries + 1])
    run_len = run_ends - run_starts + 1
    if np.any(run_len > 2):
        bad = sk[run_starts[run_len > 2][0]]
        raise NonManifold(f"edge ({bad[0]}, {bad[1]}) shared by more than two elements")

    adjacency = np.full((n_elems, 3), NO_NEIGHBOR, dtype=np.int32)
    paired = run_starts[run_len == 2]
    first, second = order[paired], order[paired + 1]
    adjacency[first // 3, first % 3] = second // 3
    adjacency[second // 3, second % 3] = first // 3

    if _edges_out is not None:
        boundary = order[run_starts[run_len == 1]]
        _edges_out.append(edges[boundary])
    return adjacency


@dataclass
class TriMesh:
    """Validated, CCW-oriented triangle mesh with shared-edge adjacency.

    Immutable after construction: all arrays are marked read-only and the
    structure is safe for concurrent reads. Build instances through
    ``TriMesh.from_arrays``, ``generate_square_mesh``, or ``load_msh``.
    """

    nodes: np.ndarray          # (n_nodes, 2) float64
    elements: np.ndarray       # (n_elems, 3) int32, CCW
    elem_adjacency: np.ndarray  # (n_elems, 3) int32, NO_NEIGHBOR on boundary
    elem_areas: np.ndarray     # (n_elems,) float64
    bbox: tuple = field(default=None)  # (xmin, ymin, xmax, ymax)

    @classmethod
    def from_arrays(cls, nodes, elements) -> "TriMesh":
        """Validate raw arrays and build a mesh.

        Elements are re-oriented CCW where needed; degenerate triangles and
        non-manifold edges raise.
        """
        nodes = np.ascontiguousarray(nodes, dtype=np.float64)
        elements = np.ascontiguousarray(elements, dtype=np.int32)
        if len(elements) == 0:
            raise EmptyMesh("mesh contains no triangles")
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ParseError(f"nodes must be (n, 2), got {nodes.shape}")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise ParseError(f"elements must be (n, 3), got {elements.shape}")
        if elements.min() < 0 or elements.max() >= len(nodes):
            raise ParseError("element node index out of range")

        areas = _signed_areas(nodes, elements)
        flipped = areas < 0
        if flipped.any():
            elements = elements.copy()
            elements[flipped] = elements[flipped][:, [0, 2, 1]]
            areas = np.abs(areas)

        xmin, ymin = nodes.min(axis=0)
        xmax, ymax = nodes.max(axis=0)
        diag2 = (xmax - xmin) ** 2 + (ymax - ymin) ** 2
        bad = np.flatnonzero(areas <= _DEGENERATE_REL * diag2)
        if len(bad):
            raise DegenerateElement(int(bad[0]), float(areas[bad[0]]))

        adjacency = build_adjacency(elements)
        mesh = cls(nodes, elements, adjacency, areas, (xmin, ymin, xmax, ymax))
        for arr in (mesh.nodes, mesh.elements, mesh.elem_adjacency, mesh.elem_areas):
            arr.flags.writeable = False
        return mesh

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elems(self) -> int:
        return len(self.elements)

    @cached_property
    def elem_coords(self) -> np.ndarray:
        """Vertex coordinates per element, shape (n_elems, 3, 2)."""
        return self.nodes[self.elements]

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.elem_coords.mean(axis=1)

    @cached_property
    def _bary_inv(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-element affine inverse for barycentric coordinates.

        Returns ``(Binv, origin)`` with ``Binv`` of shape (n_elems, 2, 2) and
        ``origin`` the third vertex, such that for a point p in element e
        ``(l0, l1) = Binv[e] @ (p - origin[e])`` and ``l2 = 1 - l0 - l1``.
        """
        v0 = self.elem_coords[:, 0]
        v1 = self.elem_coords[:, 1]
        v2 = self.elem_coords[:, 2]
        d0 = v0 - v2
        d1 = v1 - v2
        det = d0[:, 0] * d1[:, 1] - d1[:, 0] * d0[:, 1]
        binv = np.empty((self.n_elems, 2, 2))
        binv[:, 0, 0] = d1[:, 1] / det
        binv[:, 0, 1] = -d1[:, 0] / det
        binv[:, 1, 0] = -d0[:, 1] / det
        binv[:, 1, 1] = d0[:, 0] / det
        return binv, v2.copy()

    def barycentric(self, elems: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of ``points`` (k, 2) in elements ``elems`` (k,)."""
        binv, origin = self._bary_inv
        rel = points - origin[elems]
        l01 = np.einsum("kij,kj->ki", binv[elems], rel)
        lam = np.empty((len(points), 3))
        lam[:, :2] = l01
        lam[:, 2] = 1.0 - l01[:, 0] - l01[:, 1]
        return lam

    def points_from_barycentric(self, elems: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """Global coordinates from barycentric triples (inverse of ``barycentric``)."""
        return np.einsum("ki,kid->kd", lam, self.elem_coords[elems])

    @cached_property
    def domain_area(self) -> float:
        """Area of the meshed polygon, computed from the boundary loop alone."""
        edges_out: list = []
        build_adjacency(self.elements, _edges_out=edges_out)
        boundary = edges_out[0]
        p = self.nodes[boundary[:, 0]]
        q = self.nodes[boundary[:, 1]]
        return float(0.5 * np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def generate_square_mesh(n: int, perturbation: float = 0.0, seed: int = 0,
                         diagonal: str = "left") -> TriMesh:
    """Structured triangulation of the unit square with 2*n^2 elements.

    Interior nodes are jittered by up to ``perturbation * h`` per coordinate
    (boundary nodes stay put, so the domain is exactly [0, 1]^2).
    ``diagonal`` selects the cell split direction: ``left``, ``right``, or
    ``alternating`` (checkerboard). Distinct (perturbation, seed, diagonal)
    combinations yield topologically different meshes over the same domain.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not 0.0 <= perturbation < 0.5:
        raise InvalidParameter(f"perturbation must be in [0, 0.5), got {perturbation}")
    if diagonal not in ("left", "right", "alternating"):
        raise InvalidParameter(f"unknown diagonal {diagonal!r}")

    h = 1.0 / n
    xs, ys = np.meshgrid(np.linspace(0, 1, n + 1), np.linspace(0, 1, n + 1),
                         indexing="ij")
    nodes = np.column_stack([xs.ravel(), ys.ravel()])
    if perturbation > 0:
        rng = np.random.default_rng(seed)
        jitter = rng.uniform(-perturbation * h, perturbation * h, size=nodes.shape)
        interior = ((nodes[:, 0] > 0) & (nodes[:, 0] < 1)
                    & (nodes[:, 1] > 0) & (nodes[:, 1] < 1))
        nodes[interior] += jitter[interior]

    def nid(i, j):
        return i * (n + 1) + j

    elements = []
    for i in range(n):
        for j in range(n):
            v00, v10 = nid(i, j), nid(i + 1, j)
            v01, v11 = nid(i, j + 1), nid(i + 1, j + 1)
            if diagonal == "alternating":
                diag = "left" if (i + j) % 2 == 0 else "right"
            else:
                diag = diagonal
            if diag == "left":
                elements.append((v00, v10, v11))
                elements.append((v00, v11, v01))
            else:
                elements.append((v00, v10, v01))
                elements.append((v10, v11, v01))
    return TriMesh.from_arrays(nodes, np.array(elements, dtype=np.int32))


def load_msh(path) -> TriMesh:
    """Read a Gmsh MSH 2.2 ASCII file.

    Only 3-node triangles (element type 2) become mesh elements; other
    element types (points, lines) are skipped.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    try:
        return _parse_msh(lines)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _parse_msh(lines: list[str]) -> TriMesh:
    def section(name):
        try:
            start = lines.index(f"${name}")
            end = lines.index(f"$End{name}")
        except ValueError:
            raise ParseError(f"missing ${name} section")
        return lines[start + 1:end]

    fmt = section("MeshFormat")
    version = fmt[0].split()[0]
    if not version.startswith("2."):
        raise ParseError(f"unsupported MSH version {version} (need 2.x ASCII)")

    node_lines = section("Nodes")
    n_nodes = int(node_lines[0])
    node_ids = np.empty(n_nodes, dtype=np.int64)
    coords = np.empty((n_nodes, 2))
    for i, ln in enumerate(node_lines[1:1 + n_nodes]):
        parts = ln.split()
        node_ids[i] = int(parts[0])
        coords[i] = (float(parts[1]), float(parts[2]))
    id_map = {int(nid): i for i, nid in enumerate(node_ids)}

    elem_lines = section("Elements")
    n_elems = int(elem_lines[0])
    triangles = []
    for ln in elem_lines[1:1 + n_elems]:
        parts = ln.split()
        etype = int(parts[1])
        if etype != 2:
            continue
        ntags = int(parts[2])
        conn = parts[3 + ntags:]
        if len(conn) != 3:
            raise ParseError(f"triangle with {len(conn)} nodes")
        triangles.append([id_map[int(c)] for c in conn])
    if not triangles:
        raise EmptyMesh("no triangles in $Elements")
    return TriMesh.from_arrays(coords, np.array(triangles, dtype=np.int32))


def save_msh(mesh: TriMesh, path) -> None:
    """Write the MSH 2.2 ASCII subset read by ``load_msh`` (round-trip safe)."""
    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write(f"$Nodes\n{mesh.n_nodes}\n")
        for i, (x, y) in enumerate(mesh.nodes, start=1):
            fh.write(f"{i} {float(x)!r} {float(y)!r} 0\n")
        fh.write("$EndNodes\n")
        fh.write(f"$Elements\n{mesh.n_elems}\n")
        for e, (a, b, c) in enumerate(mesh.elements + 1, start=1):
            fh.write(f"{e} 2 2 0 0 {a} {b} {c}\n")
        fh.write("$EndElements\n")
