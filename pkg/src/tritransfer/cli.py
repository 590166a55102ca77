"""Command-line interface: one-shot transfers plus the experiment harnesses
(integral accuracy study, mesh-refinement convergence, iterated round trips,
and timing benchmarks), all emitting versioned CSV files."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .errors import InvalidParameter, TransferError
from .fem import NodalField, assemble_mass_matrix, cg_solve
from .fields import get_field
from .intersect import find_intersections
from .locate import UniformGridLocator
from .mesh import TriMesh, generate_square_mesh, load_msh
from .metrics import (dof_l2_error, mesh_mass_error, supermesh_l2_error,
                      supermesh_mass_error)
from .montecarlo import MeshBackedField, SamplePlan, assemble_load_mc
from .rbf import RbfConfig, RbfSupports
from .transfer import (MCTransferOperator, MITransferOperator,
                       RbfTransferOperator, transfer_mc, transfer_mi,
                       transfer_rbf)

_SCHEMAS = {
    "transfer": "node_id,x,y,value",
    "integral-study": "mode,n_samples,seed,e_int",
    "convergence": "h,method,n_samples,e_l2_supermesh,e_mass_supermesh",
    "roundtrip": "iteration,method,n_samples,seed,e_l2_dof,e_mass_mesh",
    "bench": "elements,method,init_time,online_time",
}


def _write_csv(path, command, rows):
    lines = []
    if command != "transfer":
        # field CSVs carry only the plain column header; metric CSVs are
        # versioned so downstream readers can detect schema drift
        lines.append(f"# schema: tritransfer/{command} v1")
    lines.append(_SCHEMAS[command])
    lines.extend(rows)
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fmt(x) -> str:
    return repr(float(x))


def parse_gen_spec(spec: str) -> TriMesh:
    """Generator spec ``n,perturbation,seed,diagonal``, later parts optional."""
    parts = spec.split(",")
    if not 1 <= len(parts) <= 4:
        raise InvalidParameter(f"bad mesh generator spec {spec!r}")
    n = int(parts[0])
    perturbation = float(parts[1]) if len(parts) > 1 else 0.0
    seed = int(parts[2]) if len(parts) > 2 else 0
    diagonal = parts[3] if len(parts) > 3 else "left"
    return generate_square_mesh(n, perturbation, seed=seed, diagonal=diagonal)


def _load_mesh(path: str | None, gen: str | None, what: str) -> TriMesh:
    if (path is None) == (gen is None):
        raise InvalidParameter(
            f"exactly one of --{what}-mesh and --gen-{what} is required")
    return load_msh(path) if path is not None else parse_gen_spec(gen)


def _parse_seeds(spec) -> list[int]:
    if isinstance(spec, (list, tuple)):
        return [int(s) for s in spec]
    return [int(s) for s in str(spec).split(",")]


def _field_from_csv(path: str, mesh: TriMesh) -> NodalField:
    data = np.atleast_1d(np.genfromtxt(path, delimiter=",", names=True))
    order = np.argsort(data["node_id"].astype(np.int64))
    coeffs = np.asarray(data["value"], dtype=np.float64)[order]
    if len(coeffs) != mesh.n_nodes:
        raise InvalidParameter(
            f"field CSV has {len(coeffs)} nodes, mesh has {mesh.n_nodes}")
    return NodalField(mesh, coeffs)


# ---------------------------------------------------------------- transfer

def cmd_transfer(cfg) -> int:
    source_mesh = _load_mesh(cfg.source_mesh, cfg.gen_source, "source")
    target_mesh = _load_mesh(cfg.target_mesh, cfg.gen_target, "target")
    if cfg.field_csv:
        fs = _field_from_csv(cfg.field_csv, source_mesh)
    else:
        fs = NodalField.from_function(source_mesh, get_field(cfg.field).fn)

    if cfg.method == "mi":
        ft = transfer_mi(target_mesh, fs, quad_degree=cfg.quad_degree,
                         cg_tol=cfg.cg_tol)
    elif cfg.method == "mc":
        plan = SamplePlan.build(cfg.samples, cfg.sampling,
                                seed=_parse_seeds(cfg.seeds or "0")[0])
        ft = transfer_mc(target_mesh, MeshBackedField(fs), plan,
                         cg_tol=cfg.cg_tol, workers=cfg.workers)
    elif cfg.method == "rbf":
        ft = transfer_rbf(target_mesh, fs,
                          RbfConfig(regularization=cfg.rbf_regularization))
    else:
        raise InvalidParameter(f"unknown method {cfg.method!r}")

    rows = [f"{i},{_fmt(x)},{_fmt(y)},{_fmt(v)}"
            for i, ((x, y), v) in enumerate(zip(target_mesh.nodes, ft.coeffs))]
    _write_csv(cfg.out, "transfer", rows)
    return 0


# ---------------------------------------------------------- integral-study

#: doubling sample grid; Sobol block imbalance is mildest near powers of two
INTEGRAL_N_GRID = (400, 800, 1600, 3200, 6400, 12800, 25600, 40000)


def cmd_integral_study(cfg) -> int:
    mesh = (parse_gen_spec(cfg.gen_source) if cfg.gen_source
            else generate_square_mesh(8, 0.2, seed=3))
    field = get_field(cfg.field if cfg.field != "smooth" else "linear")
    exact = 1.0 if field.name == "linear" else None
    if exact is None:
        raise InvalidParameter("integral-study requires the linear field")
    seeds = _parse_seeds(cfg.seeds) if cfg.seeds else list(range(30))

    rows = []
    for mode in ("uniform", "sobol"):
        for n_samples in INTEGRAL_N_GRID:
            for seed in seeds:
                plan = SamplePlan.build(n_samples, mode, seed=seed)
                b = assemble_load_mc(mesh, field, plan, workers=cfg.workers)
                e_int = abs(b.sum() - exact) / abs(exact)
                rows.append(f"{mode},{n_samples},{seed},{_fmt(e_int)}")
    _write_csv(cfg.out, "integral-study", rows)
    return 0


# ------------------------------------------------------------- convergence

CONVERGENCE_LEVELS = (8, 16, 32, 64)
CONVERGENCE_SAMPLE_GRID = (400, 800, 1200, 1600)


def cmd_convergence(cfg) -> int:
    field = get_field(cfg.field)
    seed = _parse_seeds(cfg.seeds or "0")[0]
    rows = []
    levels = [int(v) for v in str(cfg.levels).split(",")] if cfg.levels \
        else list(CONVERGENCE_LEVELS)
    for n in levels:
        # matched characteristic size, different topology and interior jitter
        source = generate_square_mesh(n, cfg.perturbation, seed=10 + n,
                                      diagonal="left")
        target = generate_square_mesh(n, cfg.perturbation, seed=20 + n,
                                      diagonal="right")
        fs = NodalField.from_function(source, field.fn)
        intersections = find_intersections(target, source)
        h = 1.0 / n

        ft = transfer_mi(target, fs, quad_degree=cfg.quad_degree,
                         cg_tol=cfg.cg_tol, intersections=intersections)
        rows.append("%s,mi,,%s,%s" % (
            _fmt(h), _fmt(supermesh_l2_error(fs, ft, intersections)),
            _fmt(supermesh_mass_error(fs, ft, intersections))))

        ft = transfer_rbf(target, fs,
                          RbfConfig(regularization=cfg.rbf_regularization))
        rows.append("%s,rbf,,%s,%s" % (
            _fmt(h), _fmt(supermesh_l2_error(fs, ft, intersections)),
            _fmt(supermesh_mass_error(fs, ft, intersections))))

        source_box = MeshBackedField(fs)
        for n_samples in CONVERGENCE_SAMPLE_GRID:
            plan = SamplePlan.build(n_samples, cfg.sampling, seed=seed)
            ft = transfer_mc(target, source_box, plan, cg_tol=cfg.cg_tol,
                             workers=cfg.workers)
            rows.append("%s,mc,%d,%s,%s" % (
                _fmt(h), n_samples,
                _fmt(supermesh_l2_error(fs, ft, intersections)),
                _fmt(supermesh_mass_error(fs, ft, intersections))))
    _write_csv(cfg.out, "convergence", rows)
    return 0


# --------------------------------------------------------------- roundtrip

def roundtrip_pair(cfg) -> tuple[TriMesh, TriMesh]:
    """Fine/coarse pair sized like the paper-scale coupling meshes."""
    fine = (parse_gen_spec(cfg.gen_source) if cfg.gen_source
            else generate_square_mesh(100, 0.2, seed=1, diagonal="left"))
    coarse = (parse_gen_spec(cfg.gen_target) if cfg.gen_target
              else generate_square_mesh(30, 0.2, seed=2, diagonal="right"))
    return fine, coarse


#: oscillatory default reference: ~6 coarse elements per wavelength, so the
#: round trip is dominated by what the coarse space cannot represent
ROUNDTRIP_FIELD = "sin(32*x)*cos(32*y) + 2"


def _roundtrip_run(forward, backward, reference, iterations):
    f = reference
    rows = []
    for k in range(1, iterations + 1):
        f = backward.apply(forward.apply(f))
        rows.append((k, dof_l2_error(f, reference),
                     mesh_mass_error(f, reference)))
    return rows


def cmd_roundtrip(cfg) -> int:
    fine, coarse = roundtrip_pair(cfg)
    field = get_field(cfg.field if cfg.field != "smooth" else ROUNDTRIP_FIELD)
    reference = NodalField.from_function(fine, field.fn)
    seeds = _parse_seeds(cfg.seeds) if cfg.seeds else list(range(8))
    sample_grid = ([cfg.samples] if cfg.samples else
                   list(CONVERGENCE_SAMPLE_GRID))
    rows = []

    forward = MITransferOperator(coarse, fine, cg_tol=cfg.cg_tol)
    backward = MITransferOperator(fine, coarse, cg_tol=cfg.cg_tol)
    for k, e, m in _roundtrip_run(forward, backward, reference, cfg.iterations):
        rows.append(f"{k},mi,,,{_fmt(e)},{_fmt(m)}")

    rbf_cfg = RbfConfig(regularization=cfg.rbf_regularization)
    forward = RbfTransferOperator(coarse, fine, rbf_cfg)
    backward = RbfTransferOperator(fine, coarse, rbf_cfg)
    for k, e, m in _roundtrip_run(forward, backward, reference, cfg.iterations):
        rows.append(f"{k},rbf,,,{_fmt(e)},{_fmt(m)}")

    for n_samples in sample_grid:
        for seed in seeds:
            plan = SamplePlan.build(n_samples, cfg.sampling, seed=seed)
            forward = MCTransferOperator(coarse, fine, plan, cg_tol=cfg.cg_tol)
            backward = MCTransferOperator(fine, coarse, plan, cg_tol=cfg.cg_tol)
            for k, e, m in _roundtrip_run(forward, backward, reference,
                                          cfg.iterations):
                rows.append(f"{k},mc,{n_samples},{seed},{_fmt(e)},{_fmt(m)}")
    _write_csv(cfg.out, "roundtrip", rows)
    return 0


# ------------------------------------------------------------------- bench

BENCH_SIZES = (1000, 10000, 100000, 200000)


def _bench_mi(target, source, fs, repetitions):
    init = online = np.inf
    for _ in range(repetitions):
        t0 = time.perf_counter()
        op = MITransferOperator(target, source)
        t1 = time.perf_counter()
        op.apply(fs)
        t2 = time.perf_counter()
        init = min(init, t1 - t0)
        online = min(online, t2 - t1)
    return init, online


def _bench_mc(target, source, fs, plan, repetitions):
    # initialization = sample localization; online = integration + solve,
    # querying the source pointwise as a black box would be
    box = MeshBackedField(fs)
    mass = assemble_mass_matrix(target)
    init = online = np.inf
    chunk = 1024
    for _ in range(repetitions):
        t0 = time.perf_counter()
        locator = UniformGridLocator.build(source)
        for lo in range(0, target.n_elems, chunk):
            hi = min(lo + chunk, target.n_elems)
            locator.locate_many(np.einsum(
                "nj,ejd->end", plan.barycentric,
                target.elem_coords[lo:hi]).reshape(-1, 2))
        t1 = time.perf_counter()
        b = assemble_load_mc(target, box, plan)
        cg_solve(mass, b)
        t2 = time.perf_counter()
        init = min(init, t1 - t0)
        online = min(online, t2 - t1)
    return init, online


def _bench_rbf(target, source, fs, repetitions):
    init = online = np.inf
    for _ in range(repetitions):
        t0 = time.perf_counter()
        supports = RbfSupports(target.nodes, source.nodes, RbfConfig())
        t1 = time.perf_counter()
        supports.fit(fs.coeffs)
        t2 = time.perf_counter()
        init = min(init, t1 - t0)
        online = min(online, t2 - t1)
    return init, online


def cmd_bench(cfg) -> int:
    sizes = [int(v) for v in str(cfg.sizes).split(",")] if cfg.sizes \
        else list(BENCH_SIZES)
    field = get_field(cfg.field)
    plan = SamplePlan.build(cfg.samples or 400, cfg.sampling,
                            seed=_parse_seeds(cfg.seeds or "0")[0])
    reps = cfg.repetitions
    rows = []
    for elements in sizes:
        n = max(2, round((elements / 2.0) ** 0.5))
        source = generate_square_mesh(n, 0.2, seed=10, diagonal="left")
        target = generate_square_mesh(n, 0.2, seed=20, diagonal="right")
        fs = NodalField.from_function(source, field.fn)
        for method, bench in (("mi", _bench_mi), ("rbf", _bench_rbf)):
            try:
                init, online = bench(target, source, fs, reps)
            except MemoryError:
                rows.append(f"{target.n_elems},{method},oom,oom")
                continue
            rows.append(f"{target.n_elems},{method},{_fmt(init)},{_fmt(online)}")
        try:
            init, online = _bench_mc(target, source, fs, plan, reps)
            rows.append(f"{target.n_elems},mc,{_fmt(init)},{_fmt(online)}")
        except MemoryError:
            rows.append(f"{target.n_elems},mc,oom,oom")
    _write_csv(cfg.out, "bench", rows)
    return 0


# ------------------------------------------------------------------ parser

def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--method", default="mi", choices=["mi", "mc", "rbf"])
    p.add_argument("--source-mesh", help="source mesh (Gmsh MSH 2.2 ASCII)")
    p.add_argument("--target-mesh", help="target mesh (Gmsh MSH 2.2 ASCII)")
    p.add_argument("--gen-source", metavar="N,PERTURB,SEED,DIAGONAL",
                   help="generate the source mesh instead of loading it")
    p.add_argument("--gen-target", metavar="N,PERTURB,SEED,DIAGONAL",
                   help="generate the target mesh instead of loading it")
    p.add_argument("--field", default="smooth",
                   help="named field (linear, smooth) or an expression in x, y")
    p.add_argument("--field-csv", help="nodal source values (node_id,x,y,value)")
    p.add_argument("--samples", type=int, default=None,
                   help="samples per target element (mc)")
    p.add_argument("--sampling", default="sobol", choices=["uniform", "sobol"])
    p.add_argument("--seeds", default=None,
                   help="comma-separated seed list (default: command-specific)")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--quad-degree", type=int, default=2)
    p.add_argument("--cg-tol", type=float, default=1e-12)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rbf-regularization", type=float,
                   default=RbfConfig.regularization)
    p.add_argument("--perturbation", type=float, default=0.2)
    p.add_argument("--levels", help="comma-separated refinement levels n")
    p.add_argument("--sizes", help="comma-separated element counts (bench)")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tritransfer",
        description="Conservative field transfer between 2D triangular meshes")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("transfer", "integral-study", "convergence", "roundtrip",
                 "bench"):
        _add_common(sub.add_parser(name))
    return parser


def _apply_config_file(args, argv):
    if not args.config:
        return args
    with open(args.config) as fh:
        data = json.load(fh)
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in data.items():
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise InvalidParameter(f"unknown config key {key!r}")
        if key not in explicit:
            setattr(args, key, value)
    return args


_COMMANDS = {
    "transfer": cmd_transfer,
    "integral-study": cmd_integral_study,
    "convergence": cmd_convergence,
    "roundtrip": cmd_roundtrip,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        args = _apply_config_file(args, argv)
        if args.samples is None and args.command == "transfer" \
                and args.method == "mc":
            args.samples = 1600
        return _COMMANDS[args.command](args)
    except (TransferError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
