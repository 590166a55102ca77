"""End-to-end transfer pipelines and reusable per-mesh-pair operators.

Operators split the work the way a coupling loop does: geometry and
localization happen once at construction (initialization), each ``apply`` is
one online transfer.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fem import NodalField, SparseSymMatrix, assemble_mass_matrix, cg_solve
from .intersect import (IntersectionSet, assemble_load_intersection,
                        find_intersections, load_matrix_intersection)
from .locate import OUTSIDE, UniformGridLocator
from .mesh import TriMesh
from .montecarlo import SamplePlan, assemble_load_mc
from .quadrature import triangle_rule
from .rbf import RbfConfig, RbfSupports, rbf_transfer, source_points_from_field

_CHUNK = 256


class MITransferOperator:
    """Mesh-intersection Galerkin projection onto a fixed target mesh."""

    def __init__(self, target: TriMesh, source_mesh: TriMesh,
                 quad_degree: int = 2, cg_tol: float = 1e-12,
                 source_locator: UniformGridLocator | None = None):
        self.target = target
        self.source_mesh = source_mesh
        self.cg_tol = cg_tol
        self.rule = triangle_rule(quad_degree)
        self.intersections: IntersectionSet = find_intersections(
            target, source_mesh, source_locator)
        self.mass: SparseSymMatrix = assemble_mass_matrix(target)
        self._load_matrix = load_matrix_intersection(
            target, source_mesh, self.intersections, self.rule)

    def apply(self, source_field: NodalField) -> NodalField:
        b = self._load_matrix @ source_field.coeffs
        return NodalField(self.target, cg_solve(self.mass, b, tol=self.cg_tol))


class MCTransferOperator:
    """Monte Carlo Galerkin projection with localization done once.

    Sample points depend only on the target mesh and the plan, so the source
    elements containing them are found at construction. For sources that are
    nodal fields on the known source mesh the whole estimator is linear in
    the source coefficients, so it is folded into a sparse load matrix once;
    ``apply_sampled`` keeps the pointwise-query path for true black boxes.
    """

    def __init__(self, target: TriMesh, source_mesh: TriMesh, plan: SamplePlan,
                 cg_tol: float = 1e-12,
                 source_locator: UniformGridLocator | None = None):
        self.target = target
        self.source_mesh = source_mesh
        self.plan = plan
        self.cg_tol = cg_tol
        self.mass = assemble_mass_matrix(target)
        locator = source_locator or UniformGridLocator.build(source_mesh)

        n = plan.n_samples
        lam = plan.barycentric
        self._src_elem = np.empty((target.n_elems, n), dtype=np.int32)
        shape = (target.n_nodes, source_mesh.n_nodes)
        dense_acc = None
        if target.n_nodes * source_mesh.n_nodes <= 2 * 10**7:
            dense_acc = np.zeros(target.n_nodes * source_mesh.n_nodes)
        blocks = []
        for lo in range(0, target.n_elems, _CHUNK):
            hi = min(lo + _CHUNK, target.n_elems)
            pts = np.einsum("nj,ejd->end", lam,
                            target.elem_coords[lo:hi]).reshape(-1, 2)
            elem, _ = locator.locate_many(pts)
            out = np.flatnonzero(elem == OUTSIDE)
            for i in out:
                elem[i] = locator.nearest_element(pts[i])
            self._src_elem[lo:hi] = elem.reshape(hi - lo, n)

            lam_s = source_mesh.barycentric(elem, pts)
            # snapped boundary samples can carry small negative barycentrics
            np.clip(lam_s, 0.0, None, out=lam_s)
            lam_s /= lam_s.sum(axis=1, keepdims=True)
            # (|area|/N) psi_t(x_j) psi_s(x_j) for the 3x3 node pairs of
            # every sample; each sample contributes to a 3x3 index block
            scale = np.repeat(target.elem_areas[lo:hi] / n, n)
            w = (scale[:, None, None] * lam_s[:, None, :]
                 * np.tile(lam, (hi - lo, 1))[:, :, None])        # (S, 3, 3)
            rows = np.repeat(target.elements[lo:hi], n, axis=0)   # (S, 3)
            cols = source_mesh.elements[elem]                     # (S, 3)
            keys = (rows[:, :, None].astype(np.int64) * source_mesh.n_nodes
                    + cols[:, None, :])
            if dense_acc is not None:
                dense_acc += np.bincount(keys.ravel(), weights=w.ravel(),
                                         minlength=len(dense_acc))
            else:
                blocks.append(sp.coo_matrix(
                    (w.ravel(), (keys.ravel() // source_mesh.n_nodes,
                                 keys.ravel() % source_mesh.n_nodes)),
                    shape=shape).tocsr())
        if dense_acc is not None:
            self._load_matrix = sp.csr_matrix(dense_acc.reshape(shape))
        else:
            self._load_matrix = blocks[0]
            for block in blocks[1:]:
                self._load_matrix = self._load_matrix + block

    def apply(self, source_field: NodalField) -> NodalField:
        """Transfer a nodal field on the source mesh (precomputed estimator)."""
        b = self._load_matrix @ source_field.coeffs
        return NodalField(self.target, cg_solve(self.mass, b, tol=self.cg_tol))

    def apply_sampled(self, source) -> NodalField:
        """Transfer from a pointwise black box, re-querying every sample."""
        lam = self.plan.barycentric
        n = self.plan.n_samples
        b = np.zeros(self.target.n_nodes)
        for lo in range(0, self.target.n_elems, _CHUNK):
            hi = min(lo + _CHUNK, self.target.n_elems)
            pts = np.einsum("nj,ejd->end", lam,
                            self.target.elem_coords[lo:hi]).reshape(-1, 2)
            f = source(pts).reshape(hi - lo, n)
            contrib = (self.target.elem_areas[lo:hi, None] / n) * (f @ lam)
            np.add.at(b, self.target.elements[lo:hi], contrib)
        return NodalField(self.target, cg_solve(self.mass, b, tol=self.cg_tol))


class RbfTransferOperator:
    """Local RBF fits; the support search is done once, fits run per apply."""

    def __init__(self, target: TriMesh, source_mesh: TriMesh,
                 config: RbfConfig | None = None):
        self.target = target
        self.source_mesh = source_mesh
        self.supports = RbfSupports(target.nodes, source_mesh.nodes,
                                    config or RbfConfig())

    def apply(self, source_field: NodalField) -> NodalField:
        return NodalField(self.target, self.supports.fit(source_field.coeffs))


def transfer_mi(target: TriMesh, source_field: NodalField,
                quad_degree: int = 2, cg_tol: float = 1e-12,
                intersections: IntersectionSet | None = None) -> NodalField:
    """One-shot deterministic conservative transfer."""
    if intersections is None:
        intersections = find_intersections(target, source_field.mesh)
    rule = triangle_rule(quad_degree)
    b = assemble_load_intersection(target, source_field, intersections, rule)
    mass = assemble_mass_matrix(target)
    return NodalField(target, cg_solve(mass, b, tol=cg_tol))


def transfer_mc(target: TriMesh, source, plan: SamplePlan,
                cg_tol: float = 1e-12, workers: int = 1) -> NodalField:
    """One-shot stochastic transfer from a black-box pointwise source."""
    b = assemble_load_mc(target, source, plan, workers=workers)
    mass = assemble_mass_matrix(target)
    return NodalField(target, cg_solve(mass, b, tol=cg_tol))


def transfer_rbf(target: TriMesh, source_field: NodalField,
                 config: RbfConfig | None = None) -> NodalField:
    """One-shot non-conservative RBF transfer from source nodal values."""
    return rbf_transfer(target, source_points_from_field(source_field), config)
