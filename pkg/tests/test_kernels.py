"""Compiled kernels must agree with the pure-Python reference backend."""

import numpy as np
import pytest

import tritransfer as tt
from tritransfer._kernels import get_backend
from tritransfer.locate import UniformGridLocator

try:
    compiled = get_backend("compiled")
except ImportError:
    compiled = None

pure = get_backend("pure")

needs_compiled = pytest.mark.skipif(compiled is None,
                                    reason="compiled backend not built")


@pytest.fixture(scope="module")
def pair():
    target = tt.generate_square_mesh(8, 0.25, seed=20, diagonal="right")
    source = tt.generate_square_mesh(8, 0.25, seed=10, diagonal="left")
    return target, source


@needs_compiled
def test_clip_parity(pair):
    target, source = pair
    rng = np.random.default_rng(0)
    for _ in range(300):
        t = target.elem_coords[rng.integers(target.n_elems)]
        s = source.elem_coords[rng.integers(source.n_elems)]
        vc = compiled.clip_tri_tri(t, s)
        vp = pure.clip_tri_tri(t, s)
        assert len(vc) == len(vp)
        if len(vc):
            np.testing.assert_allclose(vc, vp, atol=1e-14)


@needs_compiled
def test_locate_parity(pair):
    _, source = pair
    locator = UniformGridLocator.build(source)
    rng = np.random.default_rng(1)
    pts = rng.random((5000, 2)) * 1.1 - 0.05
    binv, origin = source._bary_inv
    args = (pts, locator.nx, locator.ny, source.bbox,
            locator.cell_start, locator.cell_elems,
            np.ascontiguousarray(binv), np.ascontiguousarray(origin), 1e-12)
    ec, lc = compiled.locate_many(*args)
    ep, lp = pure.locate_many(*args)
    np.testing.assert_array_equal(ec, ep)
    np.testing.assert_allclose(lc, lp, atol=1e-14)


@needs_compiled
def test_find_intersections_parity(pair):
    target, source = pair
    locator = UniformGridLocator.build(source)
    seeds, _ = locator.locate_many(target.centroids)
    area_eps = 1e-14 * target.elem_areas
    args = (target.elem_coords, source.elem_coords, source.elem_adjacency,
            seeds.astype(np.int32), area_eps)
    tc, sc, oc, vc = compiled.find_intersections(*args)
    tp, sp_, op, vp = pure.find_intersections(*args)
    np.testing.assert_array_equal(tc, tp)
    np.testing.assert_array_equal(sc, sp_)
    np.testing.assert_array_equal(oc, op)
    np.testing.assert_allclose(vc, vp, atol=1e-14)


def test_active_backend_exposed():
    from tritransfer._kernels import BACKEND
    assert BACKEND in ("compiled", "pure")
    with pytest.raises(ValueError):
        get_backend("fortran")
