"""Compare the compiled and pure-Python kernel backends.

Two measurements per backend:

* kernels: AMD ordering plus LDL' factor and solve of a 2-D grid Laplacian
* end to end: one LP recovery of a bundled image

Usage::

    python benchmarks/bench_backends.py [--sizes 64 96 128] [--u 1 3] [--repeat 3]
"""

import argparse
import statistics
import time

import numpy as np
import scipy.sparse as sp

from dctrecover import SolverSettings, forward_dct, make_layout, most_significant_mask, recover
from dctrecover._kernels import BACKENDS
from dctrecover.image_io import GrayImage
from dctrecover.samples import load_sample


def laplacian(k):
    t = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(k, k))
    eye = sp.identity(k)
    return (sp.kron(t, eye) + sp.kron(eye, t) + 0.1 * sp.identity(k * k)).tocsc()


def time_kernels(kern, k):
    mat = laplacian(k)
    n = mat.shape[0]
    t0 = time.perf_counter()
    perm = kern.amd(n, mat.indptr.astype(np.intp), mat.indices.astype(np.intp))
    up = sp.triu(mat[perm][:, perm]).tocsc()
    up.sort_indices()
    ap, ai = up.indptr.astype(np.intp), up.indices.astype(np.intp)
    parent, lp = kern.ldl_symbolic(n, ap, ai)
    li, lx, d, _ = kern.ldl_numeric(n, ap, ai, up.data, lp, parent, np.ones(n), 1e-13, 1e-7)
    b = np.ones(n)
    kern.ldl_solve(n, lp, li, lx, d, b)
    return time.perf_counter() - t0


def image_of(size):
    cam = load_sample("camera_256").pixels
    off = (256 - size) // 2
    return GrayImage.from_array(cam[off:off + size, off:off + size])


def time_recover(backend, size, u):
    img = image_of(size)
    grid = forward_dct(img, make_layout(img))
    rep = recover(grid, most_significant_mask(u), settings=SolverSettings(backend=backend))
    return rep.solver_stats.wall_time, rep.solver_stats.iterations


def best_of(fn, repeat):
    return min(fn() for _ in range(repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--grid", type=int, nargs="+", default=[30, 60])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 96, 128])
    ap.add_argument("--u", type=int, nargs="+", default=[1, 3])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = sorted(BACKENDS)
    print(f"backends: {', '.join(names)}")

    print("\nkernels (AMD + LDL' + solve), grid Laplacian, seconds")
    print(f"{'n':>8} " + " ".join(f"{b:>10}" for b in names) + f" {'speedup':>9}")
    for k in args.grid:
        t = {b: best_of(lambda b=b: time_kernels(BACKENDS[b], k), args.repeat) for b in names}
        ratio = t["python"] / t["compiled"] if len(names) == 2 else float("nan")
        print(f"{k * k:>8} " + " ".join(f"{t[b]:>10.4f}" for b in names) + f" {ratio:>8.1f}x")

    print("\nrecovery (solver wall time, seconds; median of repeats)")
    print(f"{'size':>6} {'U':>3} " + " ".join(f"{b:>10}" for b in names) + f" {'speedup':>9} {'iters':>6}")
    for size in args.sizes:
        for u in args.u:
            t, iters = {}, 0
            for b in names:
                runs = [time_recover(b, size, u) for _ in range(args.repeat)]
                t[b] = statistics.median(r[0] for r in runs)
                iters = runs[0][1]
            ratio = t["python"] / t["compiled"] if len(names) == 2 else float("nan")
            print(f"{size:>6} {u:>3} " + " ".join(f"{t[b]:>10.3f}" for b in names)
                  + f" {ratio:>8.1f}x {iters:>6}")


if __name__ == "__main__":
    main()
