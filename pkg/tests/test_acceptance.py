"""End-to-end acceptance suite.

Each test exercises one published acceptance criterion of the package and
reports a single pass/fail line in the terminal summary. The heavy studies
(mesh-refinement convergence, iterated round trips) run once per module and
feed several criteria.
"""

import time

import numpy as np
import pytest

import tritransfer as tt
from tritransfer.cli import ROUNDTRIP_FIELD, main
from tritransfer.fem import NodalField, assemble_mass_matrix
from tritransfer.fields import get_field
from tritransfer.intersect import clip_triangles, find_intersections
from tritransfer.mesh import TriMesh, generate_square_mesh
from tritransfer.metrics import (dof_l2_error, mesh_mass_error,
                                 supermesh_l2_error, supermesh_mass_error)
from tritransfer.montecarlo import (AnalyticField, MeshBackedField, SamplePlan,
                                    assemble_load_mc)
from tritransfer.locate import UniformGridLocator
from tritransfer.rbf import RbfConfig
from tritransfer.transfer import (MCTransferOperator, MITransferOperator,
                                  RbfTransferOperator, transfer_mc,
                                  transfer_mi, transfer_rbf)

from conftest import ACCEPTANCE_RESULTS

LEVELS = (8, 16, 32, 64)
SAMPLE_GRID = (400, 800, 1200, 1600)
INTEGRAL_GRID = (400, 800, 1600, 3200, 6400, 12800, 25600, 40000)


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_RESULTS.append(f"[{status}] criterion {num:2d} {name}: {detail}")
    assert ok, f"criterion {num} {name}: {detail}"


# ------------------------------------------------------------ shared studies

@pytest.fixture(scope="module")
def convergence_data():
    """MI / RBF / MC transfer errors over matched non-matching pairs at four
    refinement levels (supermesh metrics, smooth field, Sobol seed 0)."""
    field = get_field("smooth")
    data = {}
    for n in LEVELS:
        source = generate_square_mesh(n, 0.2, seed=10 + n, diagonal="left")
        target = generate_square_mesh(n, 0.2, seed=20 + n, diagonal="right")
        fs = NodalField.from_function(source, field.fn)
        iset = find_intersections(target, source)

        entry = {}
        ft = transfer_mi(target, fs, intersections=iset)
        entry["mi"] = (supermesh_l2_error(fs, ft, iset),
                       supermesh_mass_error(fs, ft, iset))
        ft = transfer_rbf(target, fs)
        entry["rbf"] = (supermesh_l2_error(fs, ft, iset),
                        supermesh_mass_error(fs, ft, iset))
        box = MeshBackedField(fs)
        entry["mc"] = {}
        for n_samples in SAMPLE_GRID:
            plan = SamplePlan.build(n_samples, "sobol", seed=0)
            ft = transfer_mc(target, box, plan)
            entry["mc"][n_samples] = (supermesh_l2_error(fs, ft, iset),
                                      supermesh_mass_error(fs, ft, iset))
        data[n] = entry
    return data


@pytest.fixture(scope="module")
def roundtrip_data():
    """100 coarse/fine round trips of an under-resolved oscillatory field on
    the 20000/1800-element pair; MC swept over sample counts and 8 seeds."""
    fine = generate_square_mesh(100, 0.2, seed=1, diagonal="left")
    coarse = generate_square_mesh(30, 0.2, seed=2, diagonal="right")
    fine_loc = UniformGridLocator.build(fine)
    coarse_loc = UniformGridLocator.build(coarse)
    reference = NodalField.from_function(fine, get_field(ROUNDTRIP_FIELD).fn)

    def run(forward, backward):
        f = reference
        out = {}
        for k in range(1, 101):
            f = backward.apply(forward.apply(f))
            if k in (10, 100):
                out[k] = (dof_l2_error(f, reference),
                          mesh_mass_error(f, reference))
        return out

    data = {
        "mi": run(MITransferOperator(coarse, fine, source_locator=fine_loc),
                  MITransferOperator(fine, coarse, source_locator=coarse_loc)),
        "rbf": run(RbfTransferOperator(coarse, fine),
                   RbfTransferOperator(fine, coarse)),
        "mc": {},
    }
    for n_samples in SAMPLE_GRID:
        per_seed = []
        for seed in range(8):
            plan = SamplePlan.build(n_samples, "sobol", seed=seed)
            per_seed.append(run(
                MCTransferOperator(coarse, fine, plan,
                                   source_locator=fine_loc),
                MCTransferOperator(fine, coarse, plan,
                                   source_locator=coarse_loc)))
        data["mc"][n_samples] = per_seed
    return data


# ----------------------------------------------------------------- criteria

def test_criterion_01_integral_error_rates():
    """Uniform sampling integrates x + y at the expected N^-1/2 rate; the
    low-discrepancy sampler beats the uniform mean by >= 10x at every N."""
    t0 = time.perf_counter()
    mesh = generate_square_mesh(8, 0.2, seed=3)
    field = get_field("linear")
    exact = 1.0

    uniform_mean = []
    sobol_err = []
    for n_samples in INTEGRAL_GRID:
        errs = []
        for seed in range(30):
            plan = SamplePlan.build(n_samples, "uniform", seed=seed)
            errs.append(abs(assemble_load_mc(mesh, field, plan).sum() - exact))
        uniform_mean.append(np.mean(errs))
        plan = SamplePlan.build(n_samples, "sobol", seed=0)
        sobol_err.append(abs(assemble_load_mc(mesh, field, plan).sum() - exact))
    elapsed = time.perf_counter() - t0

    slope = np.polyfit(np.log(INTEGRAL_GRID), np.log(uniform_mean), 1)[0]
    ratios = np.array(uniform_mean) / np.array(sobol_err)
    ok = (abs(slope + 0.5) <= 0.1) and np.all(ratios >= 10.0) and elapsed < 120
    report(1, "integral error rates", ok,
           f"uniform slope {slope:+.3f} (want -0.5 +/- 0.1), min sobol "
           f"advantage {ratios.min():.1f}x (want >= 10x), {elapsed:.0f}s")


def test_criterion_02_mi_convergence_rate(convergence_data):
    """Deterministic projection accuracy converges at second order in h."""
    e = [convergence_data[n]["mi"][0] for n in LEVELS]
    slope = np.polyfit(np.log([1.0 / n for n in LEVELS]), np.log(e), 1)[0]
    ok = abs(slope - 2.0) <= 0.2
    report(2, "mi convergence rate", ok,
           f"L2 slope {slope:.3f} (want 2.0 +/- 0.2)")


def test_criterion_03_mc_plateau_and_tracking(convergence_data):
    """Fixed-N stochastic accuracy flattens under refinement for N <= 1200,
    and N = 1600 stays within 2x of the deterministic error at every level.

    The tracking half is expected to fail: with the pinned low-discrepancy
    convention the estimator carries a small h-independent bias (the sequence's
    own error integrating the basis functions), so its error plateaus near
    2e-4 while the deterministic error keeps shrinking as h^2. See the
    repository notes for the full analysis.
    """
    plateau_ok = True
    for n_samples in (400, 800, 1200):
        e32 = convergence_data[32]["mc"][n_samples][0]
        e64 = convergence_data[64]["mc"][n_samples][0]
        # MI improves ~4x per level here; a plateaued curve improves < 2x
        plateau_ok &= (e32 / e64) < 2.0
    ratios = {n: convergence_data[n]["mc"][1600][0] / convergence_data[n]["mi"][0]
              for n in LEVELS}
    tracking_ok = all(r <= 2.0 for r in ratios.values())
    detail = ("plateau(N<=1200) %s; N=1600/mi ratios %s (want <= 2 at every "
              "level)") % ("ok" if plateau_ok else "violated",
                           {n: float(f"{r:.2f}") for n, r in ratios.items()})
    report(3, "mc plateau and tracking", plateau_ok and tracking_ok, detail)


def test_criterion_04_conservation_ordering(convergence_data):
    """At every level: deterministic <= stochastic(N=1600) <= local-fit/1e3
    conservation error, and the deterministic error is <= 1e-10."""
    ok = True
    worst = []
    for n in LEVELS:
        mi = convergence_data[n]["mi"][1]
        mc = convergence_data[n]["mc"][1600][1]
        rbf = convergence_data[n]["rbf"][1]
        ok &= (mi <= mc) and (mc <= rbf / 1e3) and (mi <= 1e-10)
        worst.append((n, mi, mc, rbf))
    detail = "; ".join(f"n={n}: mi {mi:.1e} <= mc {mc:.1e} <= rbf/1e3 "
                       f"{rbf / 1e3:.1e}" for n, mi, mc, rbf in worst)
    report(4, "conservation ordering", ok, detail)


def test_criterion_05_unbiasedness():
    """The sampled load estimator is unbiased: its mean over 1e4 pseudorandom
    realizations matches the exact load within 4 standard errors."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    mesh = TriMesh.from_arrays(nodes, np.array([[0, 1, 2], [0, 2, 3]]))
    source = AnalyticField(lambda x, y: x + y)
    # x + y is in the P1 space, so b = M (nodal values) exactly
    exact = assemble_mass_matrix(mesh) @ (nodes[:, 0] + nodes[:, 1])

    reps, n_samples = 10**4, 32
    est = np.empty((reps, mesh.n_nodes))
    for r in range(reps):
        plan = SamplePlan.build(n_samples, "uniform", seed=r)
        est[r] = assemble_load_mc(mesh, source, plan)
    dev = np.abs(est.mean(axis=0) - exact)
    sem = est.std(axis=0, ddof=1) / np.sqrt(reps)
    ok = bool(np.all(dev < 4 * sem))
    report(5, "estimator unbiasedness", ok,
           f"max |mean - exact| / SE = {np.max(dev / sem):.2f} (want < 4)")


def test_criterion_06_partition_invariant():
    """Intersection areas partition the domain: total 1.0 and per-target-
    element coverage both within 1e-10 for random generated pairs."""
    rng = np.random.default_rng(0)
    ok = True
    worst_total = worst_rel = 0.0
    for _ in range(10):
        n_s, n_t = rng.integers(3, 12, size=2)
        source = generate_square_mesh(int(n_s), rng.uniform(0, 0.3),
                                      seed=int(rng.integers(1000)),
                                      diagonal="left")
        target = generate_square_mesh(int(n_t), rng.uniform(0, 0.3),
                                      seed=int(rng.integers(1000)),
                                      diagonal="right")
        iset = find_intersections(target, source)
        total = abs(iset.pair_areas().sum() - 1.0)
        rel = np.max(np.abs(iset.per_target_area() / target.elem_areas - 1.0))
        worst_total = max(worst_total, total)
        worst_rel = max(worst_rel, rel)
        ok &= (total <= 1e-10) and (rel <= 1e-10)
    report(6, "supermesh partition invariant", ok,
           f"worst |sum - 1| = {worst_total:.1e}, worst per-element relative "
           f"defect = {worst_rel:.1e} (want <= 1e-10)")


def test_criterion_07_bfs_equals_brute_force():
    """Adjacency-driven intersection search finds exactly the pairs that
    all-pairs clipping finds, over 20 random perturbed pairs."""
    rng = np.random.default_rng(1)
    ok = True
    for _ in range(20):
        n = int(rng.integers(3, 11))  # up to 2 x 200 elements
        source = generate_square_mesh(n, rng.uniform(0, 0.3),
                                      seed=int(rng.integers(1000)),
                                      diagonal="left")
        target = generate_square_mesh(n, rng.uniform(0, 0.3),
                                      seed=int(rng.integers(1000)),
                                      diagonal="right")
        iset = find_intersections(target, source)
        got = set(zip(iset.pair_t.tolist(), iset.pair_s.tolist()))
        expect = set()
        for t in range(target.n_elems):
            eps = 1e-14 * target.elem_areas[t]
            for s in range(source.n_elems):
                if clip_triangles(target.elem_coords[t],
                                  source.elem_coords[s], eps) is not None:
                    expect.add((t, s))
        ok &= got == expect
    report(7, "bfs equals brute force", ok,
           "20/20 random pairs identical" if ok else "pair sets differ")


def test_criterion_08_roundtrip_reproduction(roundtrip_data):
    """Iterated round trips: (a) errors plateau (iteration 100 < 3x iteration
    10 for every method), (b) stochastic error at 100 iterations is monotone
    non-increasing in sample count (8-seed mean), (c) the local-fit baseline
    accumulates >= 10x the deterministic method's accuracy and conservation
    error."""
    d = roundtrip_data
    plateau = {"mi": d["mi"][100][0] / d["mi"][10][0],
               "rbf": d["rbf"][100][0] / d["rbf"][10][0]}
    mc_mean = {}
    for n_samples, per_seed in d["mc"].items():
        e10 = np.mean([s[10][0] for s in per_seed])
        e100 = np.mean([s[100][0] for s in per_seed])
        plateau[f"mc{n_samples}"] = e100 / e10
        mc_mean[n_samples] = e100
    a_ok = all(r < 3.0 for r in plateau.values())

    ns = sorted(mc_mean)
    b_ok = all(mc_mean[ns[i + 1]] <= mc_mean[ns[i]] for i in range(len(ns) - 1))

    c_ok = (d["rbf"][100][0] >= 10 * d["mi"][100][0]
            and d["rbf"][100][1] >= 10 * d["mi"][100][1])

    detail = (f"(a) max iter100/iter10 = {max(plateau.values()):.2f} (< 3); "
              f"(b) mc mean E at 100 iters over N: "
              f"{[float(f'{mc_mean[n]:.3e}') for n in ns]} monotone: {b_ok}; "
              f"(c) rbf/mi accuracy {d['rbf'][100][0] / d['mi'][100][0]:.1f}x,"
              f" conservation {d['rbf'][100][1] / d['mi'][100][1]:.1f}x")
    report(8, "roundtrip reproduction", a_ok and b_ok and c_ok, detail)


def test_criterion_09_exactness_suite():
    """Matching-mesh projection is the identity, constants conserve exactly
    under sampling for any N, and affine fields reproduce exactly under the
    un-regularized local fit."""
    mesh = generate_square_mesh(6, 0.15, seed=7)
    field = NodalField.from_function(mesh, lambda x, y: np.sin(4 * x) - y * y)
    identity_err = np.max(np.abs(
        transfer_mi(mesh, field).coeffs - field.coeffs))

    target = generate_square_mesh(5, 0.2, seed=20, diagonal="right")
    const = AnalyticField(lambda x, y: np.full_like(x, 2.5))
    const_err = 0.0
    from tritransfer.fem import integrate_field
    for n_samples, mode in ((1, "uniform"), (7, "sobol"), (100, "uniform")):
        out = transfer_mc(target, const, SamplePlan.build(n_samples, mode, 3),
                          cg_tol=1e-14)
        const_err = max(const_err, abs(integrate_field(out) - 2.5) / 2.5)

    source = generate_square_mesh(6, 0.2, seed=10)
    affine = NodalField.from_function(source, lambda x, y: 3 * x - 2 * y + 1)
    out = transfer_rbf(target, affine, RbfConfig(regularization=0.0))
    expect = 3 * target.nodes[:, 0] - 2 * target.nodes[:, 1] + 1
    affine_err = np.max(np.abs(out.coeffs - expect))

    ok = identity_err <= 1e-10 and const_err <= 1e-12 and affine_err <= 1e-10
    report(9, "exactness suite", ok,
           f"identity {identity_err:.1e}, constant conservation "
           f"{const_err:.1e}, affine reproduction {affine_err:.1e} "
           f"(want <= 1e-10)")


def test_criterion_10_determinism_across_workers(tmp_path):
    """Fixed seeds and configs give byte-identical metric CSVs no matter how
    many workers run the sampling."""
    outputs = []
    for workers in (1, 4, 8):
        out = tmp_path / f"conv_w{workers}.csv"
        rc = main(["convergence", "--levels", "8,16", "--seeds", "0",
                   "--workers", str(workers), "--out", str(out)])
        assert rc == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    report(10, "worker determinism", ok,
           "convergence CSVs byte-identical at workers 1/4/8" if ok
           else "CSVs differ across worker counts")


def test_criterion_11_scaling_shape(tmp_path):
    """Online cost per element stays within 3x between 1e5 and 2e5 elements
    for every method (linear-scaling plateau)."""
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--sizes", "100000,200000", "--repetitions", "1",
               "--samples", "400", "--out", str(out)])
    assert rc == 0
    per_elem = {}
    for line in out.read_text().splitlines()[2:]:
        elements, method, _, online = line.split(",")
        per_elem.setdefault(method, []).append(float(online) / int(elements))
    ratios = {m: max(v) / min(v) for m, v in per_elem.items()}
    ok = all(len(v) == 2 for v in per_elem.values()) \
        and all(r < 3.0 for r in ratios.values())
    report(11, "scaling shape", ok,
           "online cost/element ratio 2e5 vs 1e5: "
           + ", ".join(f"{m} {r:.2f}x" for m, r in sorted(ratios.items()))
           + " (want < 3)")
