"""Stochastic approximation of the Galerkin load vector from pointwise
source queries, with uniform pseudorandom and Sobol sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDensity, InvalidParameter, SourceEvalFailed
from .fem import NodalField
from .locate import OUTSIDE, UniformGridLocator
from .mesh import TriMesh
from .sobol import sobol_2d

#: elements per vectorized accumulation chunk
_CHUNK = 512


class AnalyticField:
    """Closed-form source field: a pure vectorized callable on (x, y)."""

    def __init__(self, fn, name: str = "analytic"):
        self.fn = fn
        self.name = name

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.asarray(self.fn(points[..., 0], points[..., 1]), dtype=np.float64)


class MeshBackedField:
    """Pointwise evaluator backed by a nodal field plus a locator.

    The only discretization information exposed is the evaluate-at-point
    interface. Points that fall outside the mesh are handled per ``outside``:
    ``snap`` (default) clamps to the nearest element's barycentrics, while
    ``strict`` raises ``SourceEvalFailed``.
    """

    def __init__(self, field: NodalField, locator: UniformGridLocator | None = None,
                 outside: str = "snap"):
        if outside not in ("snap", "strict"):
            raise InvalidParameter(f"unknown outside policy {outside!r}")
        self.field = field
        self.locator = locator or UniformGridLocator.build(field.mesh)
        self.outside = outside

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        flat = points.reshape(-1, 2)
        elem, lam = self.locator.locate_many(flat)
        out = np.flatnonzero(elem == OUTSIDE)
        if len(out):
            if self.outside == "strict":
                raise SourceEvalFailed(
                    f"{len(out)} sample points outside the source mesh")
            for i in out:
                elem[i] = self.locator.nearest_element(flat[i])
            lam_fix = self.field.mesh.barycentric(elem[out], flat[out])
            lam_fix = np.clip(lam_fix, 0.0, None)
            lam_fix /= lam_fix.sum(axis=1, keepdims=True)
            lam[out] = lam_fix
        vals = self.field.eval_in_elements(elem, lam)
        return vals.reshape(points.shape[:-1])


def bary_map(xi, eta):
    """Area-uniform map from the unit square to barycentric coordinates.

    (xi, eta) uniform on [0,1)^2 pushes forward to the uniform distribution
    on the triangle: (1 - sqrt(xi), sqrt(xi)(1 - eta), sqrt(xi) eta).
    """
    xi = np.asarray(xi, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    r = np.sqrt(xi)
    return np.stack([1.0 - r, r * (1.0 - eta), r * eta], axis=-1)


@dataclass
class SamplePlan:
    """Per-element sampling plan: N parametric points shared by all elements."""

    n_samples: int
    mode: str                 # "uniform" or "sobol"
    seed: int
    parametric: np.ndarray    # (N, 2) in [0, 1)^2
    barycentric: np.ndarray = field(default=None)  # (N, 3)

    def __post_init__(self):
        if self.barycentric is None:
            self.barycentric = bary_map(self.parametric[:, 0], self.parametric[:, 1])

    @classmethod
    def build(cls, n_samples: int, mode: str = "sobol", seed: int = 0) -> "SamplePlan":
        """``uniform``: seeded pseudorandom points; ``sobol``: deterministic
        low-discrepancy points with the seed acting as a skip offset."""
        if not 1 <= n_samples <= 10**6:
            raise InvalidParameter(f"n_samples must be in [1, 1e6], got {n_samples}")
        if mode == "uniform":
            rng = np.random.default_rng(seed)
            pts = rng.random((n_samples, 2))
        elif mode == "sobol":
            pts = sobol_2d(n_samples, skip=seed * n_samples)
        else:
            raise InvalidParameter(f"unknown sampling mode {mode!r}")
        return cls(n_samples, mode, seed, pts)


def _accumulate(target: TriMesh, source, plan: SamplePlan, density,
                elem_range=None) -> np.ndarray:
    """Element-local estimator contributions, shape (n_elems_in_range, 3).

    contribution[e, a] = sum_j f(x_j) psi_a(x_j) / (N p(x_j)); the uniform
    density 1/|element area| reproduces the |area|/N scaling exactly.
    """
    lo, hi = elem_range if elem_range is not None else (0, target.n_elems)
    lam = plan.barycentric
    n = plan.n_samples
    contrib = np.empty((hi - lo, 3))
    for c0 in range(lo, hi, _CHUNK):
        c1 = min(c0 + _CHUNK, hi)
        coords = target.elem_coords[c0:c1]                  # (E, 3, 2)
        pts = np.einsum("nj,ejd->end", lam, coords)         # (E, N, 2)
        f = source(pts.reshape(-1, 2)).reshape(c1 - c0, n)
        if not np.all(np.isfinite(f)):
            raise SourceEvalFailed("source returned a non-finite value")
        p = density(np.arange(c0, c1), pts)                 # (E, N)
        if np.any(p <= 0.0):
            raise InvalidDensity("density must be strictly positive at samples")
        contrib[c0 - lo:c1 - lo] = ((f / (n * p)) @ lam)
    return contrib


def _uniform_density(target: TriMesh):
    inv_area = 1.0 / target.elem_areas

    def density(elems, pts):
        return np.broadcast_to(inv_area[elems][:, None],
                               (len(elems), pts.shape[1]))
    return density


def _reduce_to_nodes(target: TriMesh, contrib: np.ndarray) -> np.ndarray:
    b = np.zeros(target.n_nodes)
    np.add.at(b, target.elements, contrib)
    return b


def assemble_load_mc(target: TriMesh, source, plan: SamplePlan,
                     workers: int = 1) -> np.ndarray:
    """Monte Carlo load vector estimate b_hat.

    The shared barycentric sample set is mapped through each target element's
    vertices, the black-box source is queried at the resulting global points,
    and (|area|/N) sum f psi_a accumulates into element-local slots which are
    reduced node-wise in fixed element order (bitwise reproducible for any
    worker count).
    """
    contrib = _run_elementwise(target, source, plan, _uniform_density(target),
                               workers)
    return _reduce_to_nodes(target, contrib)


def assemble_load_mc_weighted(target: TriMesh, source, plan: SamplePlan,
                              density, workers: int = 1) -> np.ndarray:
    """General importance-sampled estimator sum f psi / (N p).

    ``density(elems, pts)`` returns per-sample densities, normalized over each
    element; with p = 1/|area| this is bitwise identical to
    ``assemble_load_mc``.
    """
    contrib = _run_elementwise(target, source, plan, density, workers)
    return _reduce_to_nodes(target, contrib)


def importance_weights(plan: SamplePlan, density):
    """Bind a density to a plan: returns an assembler with the
    ``(target, source)`` signature of the uniform estimator."""

    def assemble(target: TriMesh, source, workers: int = 1) -> np.ndarray:
        return assemble_load_mc_weighted(target, source, plan, density, workers)
    return assemble


def _run_elementwise(target, source, plan, density, workers) -> np.ndarray:
    if workers <= 1:
        return _accumulate(target, source, plan, density)
    from concurrent.futures import ThreadPoolExecutor

    # fixed chunk grid regardless of worker count keeps results bitwise stable
    n = target.n_elems
    bounds = [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]
    contrib = np.empty((n, 3))

    def run(b):
        contrib[b[0]:b[1]] = _accumulate(target, source, plan, density, b)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        list(ex.map(run, bounds))
    return contrib
