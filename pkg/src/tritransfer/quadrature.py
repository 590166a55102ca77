"""Symmetric Gaussian quadrature rules on the reference triangle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and weights; weights sum to 1 and are scaled by the
    element area at use."""

    degree: int
    points: np.ndarray   # (n_q, 3) barycentric
    weights: np.ndarray  # (n_q,), sum 1

    def __post_init__(self):
        self.points.flags.writeable = False
        self.weights.flags.writeable = False


def _perm3(a, b, c):
    return [(a, b, c), (c, a, b), (b, c, a)]


def triangle_rule(degree: int) -> QuadratureRule:
    """Smallest catalogued rule exact for polynomials of the given degree.

    Catalogue: centroid (degree 1), 3-point (degree 2), 6-point Dunavant
    (degree 4), 7-point Dunavant (degree 5).
    """
    if degree <= 1:
        pts = [(1 / 3, 1 / 3, 1 / 3)]
        wts = [1.0]
        deg = 1
    elif degree == 2:
        pts = _perm3(2 / 3, 1 / 6, 1 / 6)
        wts = [1 / 3] * 3
        deg = 2
    elif degree <= 4:
        a1, w1 = 0.445948490915965, 0.223381589678011
        a2, w2 = 0.091576213509771, 0.109951743655322
        pts = _perm3(1 - 2 * a1, a1, a1) + _perm3(1 - 2 * a2, a2, a2)
        wts = [w1] * 3 + [w2] * 3
        deg = 4
    elif degree == 5:
        a1, w1 = 0.470142064105115, 0.132394152788506
        a2, w2 = 0.101286507323456, 0.125939180544827
        pts = ([(1 / 3, 1 / 3, 1 / 3)]
               + _perm3(1 - 2 * a1, a1, a1) + _perm3(1 - 2 * a2, a2, a2))
        wts = [0.225] + [w1] * 3 + [w2] * 3
        deg = 5
    else:
        raise InvalidParameter(f"no catalogued rule of degree {degree}")
    return QuadratureRule(deg, np.array(pts, dtype=np.float64),
                          np.array(wts, dtype=np.float64))
