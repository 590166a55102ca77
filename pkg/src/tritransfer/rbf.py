"""Non-conservative baseline: local weighted linear fits with compactly
supported C4 weights and adaptive support radius."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import InsufficientPoints, InvalidParameter, SingularFit
from .fem import NodalField
from .mesh import TriMesh

#: condition-number limit for the 3x3 normal matrix
_COND_LIMIT = 1e14


@dataclass
class RbfConfig:
    """Fit parameters; the polynomial basis is fixed linear (1, x, y).

    The default ridge weight is deliberately non-trivial: it damps noisy
    fits but biases every fitted value toward zero, which is the dominant
    source of this method's conservation error (the fit has no mechanism
    that preserves integrals). Set ``regularization=0`` for exact
    reproduction of affine fields.
    """

    regularization: float = 2e-2
    initial_radius: float | None = None  # default: 2x source mean element size
    growth: float = 1.5
    min_support: int = 6

    def __post_init__(self):
        if self.regularization < 0:
            raise InvalidParameter("regularization must be >= 0")
        if self.growth <= 1:
            raise InvalidParameter("growth factor must be > 1")
        if self.min_support < 3:
            raise InvalidParameter("min_support must cover the 3 linear coefficients")


def c4_weight(r):
    """Wendland C4 kernel (1-r)^6 (35 r^2 + 18 r + 3) / 3 on r <= 1, else 0."""
    r = np.asarray(r, dtype=np.float64)
    w = np.where(r < 1.0,
                 (1.0 - r) ** 6 * (35.0 * r * r + 18.0 * r + 3.0) / 3.0,
                 0.0)
    return w if w.ndim else float(w)


def default_initial_radius(source_points: np.ndarray) -> float:
    """Twice the mean nearest-neighbor spacing as a proxy for element size."""
    tree = cKDTree(source_points)
    d, _ = tree.query(source_points, k=2)
    return 2.0 * float(d[:, 1].mean())


def adapt_radius(target_point, source_points, config: RbfConfig,
                 tree: cKDTree | None = None) -> tuple[float, np.ndarray]:
    """Smallest radius r0 * growth^k whose ball holds >= min_support points.

    Returns ``(radius, support indices)``; raises ``InsufficientPoints`` when
    the whole cloud is smaller than min_support.
    """
    source_points = np.asarray(source_points, dtype=np.float64)
    if len(source_points) < config.min_support:
        raise InsufficientPoints(
            f"{len(source_points)} source points < min_support {config.min_support}")
    if tree is None:
        tree = cKDTree(source_points)
    r = config.initial_radius or default_initial_radius(source_points)
    while True:
        idx = tree.query_ball_point(np.asarray(target_point, float), r)
        if len(idx) >= config.min_support:
            return r, np.sort(np.asarray(idx, dtype=np.int64))
        r *= config.growth


class RbfSupports:
    """Frozen result of the per-node radius adaptation and support search.

    Holds, for every target node, its support radius and the padded index
    array of source points inside the ball (pad slots carry weight zero so
    they never influence a fit). Searching is the expensive geometric phase;
    fitting against a value vector is cheap and repeatable.
    """

    def __init__(self, target_points: np.ndarray, source_xy: np.ndarray,
                 config: RbfConfig):
        self.config = config
        self.target_points = np.asarray(target_points, dtype=np.float64)
        self.source_xy = np.asarray(source_xy, dtype=np.float64)
        tree = cKDTree(self.source_xy)
        r0 = config.initial_radius or default_initial_radius(self.source_xy)
        cfg = RbfConfig(config.regularization, r0, config.growth,
                        config.min_support)

        n = len(self.target_points)
        radii = np.empty(n)
        supports = []
        for i, p in enumerate(self.target_points):
            radii[i], idx = adapt_radius(p, self.source_xy, cfg, tree)
            supports.append(idx)
        self.radii = radii

        m = max(len(s) for s in supports)
        self.support = np.zeros((n, m), dtype=np.int64)
        self.phi2 = np.zeros((n, m))
        for i, idx in enumerate(supports):
            self.support[i, :len(idx)] = idx
            d = np.linalg.norm(self.source_xy[idx] - self.target_points[i],
                               axis=1)
            self.phi2[i, :len(idx)] = c4_weight(d / radii[i]) ** 2

    def fit(self, values: np.ndarray, return_weights: bool = False):
        """Weighted ridge fit of (1, dx, dy) at every target node, batched.

        The basis is centered at each node, so the constant coefficient is
        the fitted value there. Optionally also returns the sparse linear
        evaluation-weight matrix mapping source values to fitted values.
        """
        values = np.asarray(values, dtype=np.float64)
        d = self.source_xy[self.support] - self.target_points[:, None, :]
        ones = np.where(self.phi2 > 0.0, 1.0, 0.0)
        A = np.stack([ones, d[..., 0] * ones, d[..., 1] * ones], axis=-1)
        AtP = A.transpose(0, 2, 1) * self.phi2[:, None, :]       # (n, 3, m)
        normal = AtP @ A                                          # (n, 3, 3)
        lam = self.config.regularization
        normal += lam * np.eye(3)
        # symmetric 3x3, so the eigenvalue ratio is the condition number
        ev = np.abs(np.linalg.eigvalsh(normal))
        with np.errstate(divide="ignore"):
            cond = np.where(ev[:, 0] > 0.0, ev[:, -1] / ev[:, 0], np.inf)
        bad = np.flatnonzero(~np.isfinite(cond) | (cond > _COND_LIMIT))
        if len(bad):
            raise SingularFit(int(bad[0]), float(cond[bad[0]]))
        # first row of normal^{-1} AtP: evaluation weights for the value
        w = np.linalg.solve(normal, AtP)[:, 0, :]                 # (n, m)
        fitted = np.einsum("nm,nm->n", w, values[self.support])
        if not return_weights:
            return fitted
        n, m = self.support.shape
        rows = np.repeat(np.arange(n), m)
        W = sp.coo_matrix((w.ravel(), (rows, self.support.ravel())),
                          shape=(n, len(self.source_xy))).tocsr()
        return fitted, W


def rbf_transfer(target: TriMesh, source_points, config: RbfConfig | None = None,
                 return_weights: bool = False):
    """Fit the scattered ``source_points`` (x, y, value) at every target node.

    Per node: adaptive-radius support search, C4 diagonal weighting, and a
    3x3 ridge-regularized normal solve centered at the node. Returns a
    NodalField (and optionally the sparse evaluation-weight matrix for
    repeated transfers with fixed geometry).
    """
    config = config or RbfConfig()
    source_points = np.asarray(source_points, dtype=np.float64)
    supports = RbfSupports(target.nodes, source_points[:, :2], config)
    if return_weights:
        fitted, W = supports.fit(source_points[:, 2], return_weights=True)
        return NodalField(target, fitted), W
    return NodalField(target, supports.fit(source_points[:, 2]))


def source_points_from_field(field: NodalField) -> np.ndarray:
    """Source cloud for a P1 field: its mesh nodes with nodal values."""
    return np.column_stack([field.mesh.nodes, field.coeffs])
