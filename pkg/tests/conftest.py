"""Shared fixtures and independent numerical oracles for the test suite."""

import numpy as np
import pytest

import tritransfer as tt

#: one pass/fail line per acceptance criterion, printed after the test run
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria summary:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def duffy_rule(order=12):
    """Tensor Gauss-Legendre rule collapsed onto the reference triangle.

    Maps (u, v) on [0,1]^2 through x = u, y = v (1 - u) with Jacobian
    (1 - u); exact for polynomials well beyond anything assembled in the
    package, so it serves as an independent integration oracle.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * (1.0 - U)
    X = U
    Y = V * (1.0 - U)
    return X.ravel(), Y.ravel(), W.ravel()


def integrate_on_mesh(mesh, fn, order=12):
    """Oracle integral of fn(x, y) over a triangulated domain."""
    xr, yr, wr = duffy_rule(order)
    lam = np.stack([1.0 - xr - yr, xr, yr], axis=-1)
    pts = np.einsum("qj,ejd->eqd", lam, mesh.elem_coords)
    vals = fn(pts[..., 0], pts[..., 1])
    return float(np.einsum("q,eq,e->", wr, vals, 2.0 * mesh.elem_areas))


def brute_force_locate(mesh, point, eps=1e-12):
    """Reference point location: scan all elements, lowest index wins."""
    for e in range(mesh.n_elems):
        lam = mesh.barycentric(np.array([e]), np.asarray(point)[None, :])[0]
        if lam.min() >= -eps:
            return e
    return -1


@pytest.fixture(scope="session")
def small_pair():
    source = tt.generate_square_mesh(6, 0.2, seed=10, diagonal="left")
    target = tt.generate_square_mesh(6, 0.2, seed=20, diagonal="right")
    return target, source


@pytest.fixture(scope="session")
def matching_mesh():
    return tt.generate_square_mesh(5, 0.15, seed=7, diagonal="left")
