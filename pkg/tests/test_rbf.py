"""Local weighted-linear fitting: kernel values, radius adaptation,
reproduction properties, and failure modes."""

import numpy as np
import pytest
from scipy.spatial import cKDTree

import tritransfer as tt
from tritransfer.errors import InsufficientPoints, InvalidParameter, SingularFit
from tritransfer.fem import NodalField
from tritransfer.rbf import (RbfConfig, RbfSupports, adapt_radius, c4_weight,
                             default_initial_radius, rbf_transfer,
                             source_points_from_field)


def test_c4_kernel_values():
    assert c4_weight(0.0) == pytest.approx(1.0)
    # (1 - 1/2)^6 (35/4 + 9 + 3) / 3
    assert c4_weight(0.5) == pytest.approx((0.5 ** 6) * (35 / 4 + 9 + 3) / 3)
    assert c4_weight(1.0) == 0.0
    assert c4_weight(1.7) == 0.0
    r = np.linspace(0, 1, 50)
    w = c4_weight(r)
    assert np.all(np.diff(w) < 0)  # strictly decreasing on [0, 1]


def test_adapt_radius_against_brute_force_ball():
    rng = np.random.default_rng(2)
    cloud = rng.random((80, 2))
    cfg = RbfConfig(initial_radius=0.05, growth=1.5, min_support=6)
    for p in rng.random((10, 2)):
        r, idx = adapt_radius(p, cloud, cfg)
        d = np.linalg.norm(cloud - p, axis=1)
        expect = np.flatnonzero(d <= r)
        np.testing.assert_array_equal(idx, expect)
        assert len(idx) >= cfg.min_support
        # the previous radius in the growth schedule must have been too small
        if r > cfg.initial_radius:
            assert (d <= r / cfg.growth).sum() < cfg.min_support


def test_insufficient_points_raised():
    cfg = RbfConfig()
    with pytest.raises(InsufficientPoints):
        adapt_radius([0.5, 0.5], np.random.default_rng(0).random((4, 2)), cfg)


def test_default_radius_is_twice_mean_spacing():
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [0.5, 0.5], [0.5, 0.6]])
    tree = cKDTree(pts)
    d, _ = tree.query(pts, k=2)
    assert default_initial_radius(pts) == pytest.approx(2 * d[:, 1].mean())


def test_affine_reproduction_without_ridge(small_pair):
    target, source_mesh = small_pair
    field = NodalField.from_function(source_mesh, lambda x, y: 3 * x - 2 * y + 1)
    cfg = RbfConfig(regularization=0.0)
    out = rbf_transfer(target, source_points_from_field(field), cfg)
    expect = 3 * target.nodes[:, 0] - 2 * target.nodes[:, 1] + 1
    np.testing.assert_allclose(out.coeffs, expect, atol=1e-10)


def test_constant_reproduction_without_ridge(small_pair):
    target, source_mesh = small_pair
    field = NodalField.from_function(source_mesh, lambda x, y: np.full_like(x, 4.0))
    out = rbf_transfer(target, source_points_from_field(field),
                       RbfConfig(regularization=0.0))
    np.testing.assert_allclose(out.coeffs, 4.0, atol=1e-12)


def test_default_ridge_shrinks_toward_zero(small_pair):
    """The default ridge weight penalizes the fitted constant, so constants
    come back systematically below their true value."""
    target, source_mesh = small_pair
    field = NodalField.from_function(source_mesh, lambda x, y: np.full_like(x, 1.0))
    out = rbf_transfer(target, source_points_from_field(field), RbfConfig())
    assert np.all(out.coeffs < 1.0)
    assert np.all(out.coeffs > 0.9)


def test_weight_matrix_matches_direct_fit(small_pair):
    target, source_mesh = small_pair
    field = NodalField.from_function(source_mesh, lambda x, y: np.sin(4 * x) + y)
    pts = source_points_from_field(field)
    out, W = rbf_transfer(target, pts, RbfConfig(), return_weights=True)
    np.testing.assert_allclose(W @ pts[:, 2], out.coeffs, atol=1e-14)
    # the weight matrix is geometry-only: reusable for a second value vector
    vals2 = np.cos(5 * pts[:, 0])
    supports = RbfSupports(target.nodes, pts[:, :2], RbfConfig())
    np.testing.assert_allclose(W @ vals2, supports.fit(vals2), atol=1e-14)


def test_support_honors_min_support(small_pair):
    target, source_mesh = small_pair
    supports = RbfSupports(target.nodes, source_mesh.nodes,
                           RbfConfig(min_support=10))
    assert np.all((supports.phi2 > 0).sum(axis=1) >= 10)


def test_singular_fit_detected():
    # collinear cloud: the (1, dx, dy) basis is rank-deficient at lambda = 0
    xs = np.linspace(0, 1, 12)
    cloud = np.column_stack([xs, np.zeros_like(xs)])
    supports = RbfSupports(np.array([[0.5, 0.0]]), cloud,
                           RbfConfig(regularization=0.0, initial_radius=0.5))
    with pytest.raises(SingularFit) as err:
        supports.fit(np.ones(12))
    assert err.value.node == 0


def test_config_validation():
    with pytest.raises(InvalidParameter):
        RbfConfig(regularization=-1.0)
    with pytest.raises(InvalidParameter):
        RbfConfig(growth=1.0)
    with pytest.raises(InvalidParameter):
        RbfConfig(min_support=2)
