"""P1 finite element machinery: nodal fields, mass matrix, CG solve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, MeshMismatch, NoConvergence
from .mesh import TriMesh
from .quadrature import QuadratureRule, triangle_rule


@dataclass
class NodalField:
    """Scalar P1 field: one coefficient per mesh node."""

    mesh: TriMesh
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.mesh.n_nodes,):
            raise DimensionMismatch(
                f"{self.coeffs.shape[0]} coefficients for {self.mesh.n_nodes} nodes")
        if not np.all(np.isfinite(self.coeffs)):
            raise DimensionMismatch("non-finite field coefficient")

    @classmethod
    def from_function(cls, mesh: TriMesh, fn) -> "NodalField":
        """Nodal interpolant of ``fn(x, y)`` (vectorized over arrays)."""
        return cls(mesh, np.asarray(fn(mesh.nodes[:, 0], mesh.nodes[:, 1]),
                                    dtype=np.float64))

    def eval_in_elements(self, elems: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """Field values at barycentric points ``lam`` (k, 3) of elements ``elems``."""
        return np.einsum("ki,ki->k", self.coeffs[self.mesh.elements[elems]], lam)


def eval_basis(lam) -> np.ndarray:
    """P1 basis values at barycentric coordinates (identity for linears)."""
    return np.asarray(lam, dtype=np.float64)


@dataclass
class SparseSymMatrix:
    """Symmetric positive-definite CSR matrix (assembled exactly symmetric)."""

    csr: sp.csr_matrix

    @property
    def shape(self):
        return self.csr.shape

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        return self.csr.data

    @property
    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ x

    __matmul__ = matvec


def assemble_mass_matrix(mesh: TriMesh,
                         rule: QuadratureRule | None = None) -> SparseSymMatrix:
    """P1 mass matrix, exact for the default degree-2 rule.

    Off-diagonal entries are assembled once per unordered node pair and
    mirrored, so the result is symmetric to the last bit.
    """
    if rule is None:
        rule = triangle_rule(2)
    # local matrix from quadrature: sum_q w_q * lam_q outer lam_q, scaled by area
    local = np.einsum("q,qi,qj->ij", rule.weights, rule.points, rule.points)
    n = mesh.n_nodes
    tri = mesh.elements
    vals = mesh.elem_areas[:, None, None] * local  # (E, 3, 3)

    rows_u, cols_u, data_u = [], [], []
    for i in range(3):
        for j in range(3):
            if i > j:
                continue  # lower triangle handled by mirroring
            rows_u.append(tri[:, i])
            cols_u.append(tri[:, j])
            data_u.append(vals[:, i, j])
    r = np.concatenate(rows_u)
    c = np.concatenate(cols_u)
    d = np.concatenate(data_u)
    # canonical (min, max) keys so both orientations of a pair sum identically
    lo, hi = np.minimum(r, c), np.maximum(r, c)
    upper = sp.coo_matrix((d, (lo, hi)), shape=(n, n)).tocsr()
    upper.sum_duplicates()
    strict = sp.triu(upper, k=1)
    full = (upper + strict.T).tocsr()
    return SparseSymMatrix(full)


def cg_solve(M: SparseSymMatrix, b: np.ndarray, tol: float = 1e-12,
             maxiter: int | None = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients for ``M x = b``.

    Stops when the relative residual ||M x - b|| / ||b|| drops below ``tol``;
    raises ``NoConvergence`` (carrying the best iterate) after ``maxiter``
    iterations (default 10 * n).
    """
    b = np.asarray(b, dtype=np.float64)
    n = M.shape[0]
    if b.shape != (n,):
        raise DimensionMismatch(f"rhs length {b.shape} for {n}x{n} matrix")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    if maxiter is None:
        maxiter = 10 * n

    dinv = 1.0 / M.diagonal
    x = np.zeros(n)
    r = b.copy()
    z = dinv * r
    p = z.copy()
    rz = r @ z
    best_x, best_res = x.copy(), np.linalg.norm(r) / bnorm
    for it in range(maxiter):
        Ap = M.matvec(p)
        alpha = rz / (p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res < best_res:
            best_res, best_x = res, x.copy()
        if res <= tol:
            return x
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergence(best_x, best_res, maxiter)


def integrate_field(field: NodalField, rule: QuadratureRule | None = None) -> float:
    """Integral of the field over the mesh domain (exact for P1 with degree >= 1)."""
    if rule is None:
        rule = triangle_rule(2)
    nodal = field.coeffs[field.mesh.elements]          # (E, 3)
    per_elem = nodal @ (rule.points.T @ rule.weights)  # (E,)
    return float(field.mesh.elem_areas @ per_elem)


def basis_integrals(mesh: TriMesh) -> np.ndarray:
    """Vector of integrals of each basis function, i.e. mass-matrix row sums."""
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements, np.repeat(mesh.elem_areas[:, None] / 3.0, 3, axis=1))
    return out


def check_same_mesh(a: NodalField, b: NodalField) -> None:
    if a.mesh is not b.mesh:
        raise MeshMismatch("fields live on different meshes")
