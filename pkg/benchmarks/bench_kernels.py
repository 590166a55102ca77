"""Compare the compiled geometry kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Both backends implement the
same contracts (clipping, point location, intersection search); this script
checks they agree on a non-trivial mesh pair and reports wall-clock timings.
"""

import time

import numpy as np

import tritransfer as tt
from tritransfer._kernels import get_backend
from tritransfer.locate import UniformGridLocator


def _time(fn, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = 48
    target = tt.generate_square_mesh(n, 0.2, seed=20, diagonal="right")
    source = tt.generate_square_mesh(n, 0.2, seed=10, diagonal="left")
    locator = UniformGridLocator.build(source)
    rng = np.random.default_rng(0)
    points = rng.random((200000, 2))
    seeds, _ = locator.locate_many(target.centroids)
    area_eps = 1e-14 * target.elem_areas

    backends = {}
    for name in ("compiled", "pure"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name} backend unavailable, skipping")
    results = {}
    for name, mod in backends.items():
        binv, origin = source._bary_inv
        t_loc, located = _time(lambda m=mod: m.locate_many(
            points, locator.nx, locator.ny, source.bbox,
            locator.cell_start, locator.cell_elems,
            np.ascontiguousarray(binv), np.ascontiguousarray(origin), 1e-12))
        t_int, inter = _time(lambda m=mod: m.find_intersections(
            target.elem_coords, source.elem_coords, source.elem_adjacency,
            seeds, area_eps))
        results[name] = (t_loc, located, t_int, inter)
        print(f"{name:9s} locate_many({len(points)} pts): {t_loc * 1e3:8.1f} ms"
              f"   find_intersections({target.n_elems} elems):"
              f" {t_int * 1e3:8.1f} ms")

    if len(results) == 2:
        (l1, loc1, i1, int1), (l2, loc2, i2, int2) = (
            results["compiled"], results["pure"])
        assert np.array_equal(loc1[0], loc2[0]), "element ids differ"
        assert np.allclose(loc1[1], loc2[1], atol=1e-12), "barycentrics differ"
        assert np.array_equal(int1[0], int2[0]) and np.array_equal(
            int1[1], int2[1]), "intersection pairs differ"
        assert np.allclose(int1[3], int2[3], atol=1e-12), "vertices differ"
        print(f"backends agree; speedup: locate {l2 / l1:.1f}x, "
              f"intersections {i2 / i1:.1f}x")


if __name__ == "__main__":
    main()
