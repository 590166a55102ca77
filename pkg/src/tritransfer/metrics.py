"""Accuracy and conservation error norms, continuous (supermesh) and
discrete (DoF / single-mesh quadrature)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroDenominator
from .fem import NodalField, check_same_mesh, integrate_field
from .intersect import IntersectionSet
from .quadrature import QuadratureRule, triangle_rule


@dataclass
class ErrorReport:
    """One row of transfer-quality metrics plus run metadata."""

    method: str = ""
    e_l2_supermesh: float = np.nan    # continuous relative L2 accuracy error
    e_mass_supermesh: float = np.nan  # continuous relative conservation error
    e_l2_dof: float = np.nan          # discrete relative l2 accuracy error
    e_mass_mesh: float = np.nan       # conservation by quadrature on one mesh
    meta: dict = field(default_factory=dict)

    CSV_FIELDS = ("method", "e_l2_supermesh", "e_mass_supermesh",
                  "e_l2_dof", "e_mass_mesh")

    def to_csv_row(self) -> str:
        vals = [getattr(self, f) for f in self.CSV_FIELDS[1:]]
        return ",".join([self.method] + [repr(v) for v in vals])


def _supermesh_values(source: NodalField, target: NodalField,
                      intersections: IntersectionSet, rule: QuadratureRule):
    qp = intersections.quad_points(rule)
    lam_t = intersections.target.barycentric(qp["q_t"], qp["q_xy"])
    lam_s = intersections.source.barycentric(qp["q_s"], qp["q_xy"])
    fs = np.einsum("ki,ki->k", source.coeffs[intersections.source.elements[qp["q_s"]]],
                   lam_s)
    ft = np.einsum("ki,ki->k", target.coeffs[intersections.target.elements[qp["q_t"]]],
                   lam_t)
    return qp["q_w"], fs, ft


def supermesh_l2_error(source: NodalField, target: NodalField,
                       intersections: IntersectionSet,
                       rule: QuadratureRule | None = None) -> float:
    """Relative L2 error ||f_s - f_t|| / ||f_s|| integrated on the supermesh.

    Both fields are linear on every intersection cell, so the degree-2
    default rule integrates the squared error exactly up to roundoff.
    """
    w, fs, ft = _supermesh_values(source, target, intersections,
                                  rule or triangle_rule(2))
    den = w @ (fs * fs)
    if den <= 0.0:
        raise ZeroDenominator("source field has zero L2 norm")
    g = fs - ft
    return float(np.sqrt((w @ (g * g)) / den))


def supermesh_mass_error(source: NodalField, target: NodalField,
                         intersections: IntersectionSet,
                         rule: QuadratureRule | None = None) -> float:
    """Relative conservation error |int f_s - int f_t| / |int f_s| on the
    supermesh."""
    w, fs, ft = _supermesh_values(source, target, intersections,
                                  rule or triangle_rule(2))
    mass_s = w @ fs
    if mass_s == 0.0:
        raise ZeroDenominator("source field has zero mass")
    return float(abs(mass_s - w @ ft) / abs(mass_s))


def dof_l2_error(approx: NodalField, reference: NodalField) -> float:
    """Relative l2 error over the DoF vectors of two fields on one mesh."""
    check_same_mesh(approx, reference)
    den = np.linalg.norm(reference.coeffs)
    if den == 0.0:
        raise ZeroDenominator("reference field has zero l2 norm")
    return float(np.linalg.norm(approx.coeffs - reference.coeffs) / den)


def mesh_mass_error(approx: NodalField, reference: NodalField,
                    rule: QuadratureRule | None = None) -> float:
    """Relative conservation error with both integrals evaluated by
    quadrature on the (shared) mesh."""
    check_same_mesh(approx, reference)
    mass_ref = integrate_field(reference, rule)
    if mass_ref == 0.0:
        raise ZeroDenominator("reference field has zero mass")
    return float(abs(integrate_field(approx, rule) - mass_ref) / abs(mass_ref))
