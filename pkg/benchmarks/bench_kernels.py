"""Timing of the Cartan kernel backends and of a small Plateau solve.

Usage::

    python3 benchmarks/bench_kernels.py [--count 20000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from finslerarea import kernels, metric as M
from finslerarea.cartan import CartanIntegrand
from finslerarea.curves import circle
from finslerarea.plateau import solve


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_backends(count, repeat, n_nodes=256):
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((count, 3))
    cases = {
        "randers": M.randers([0.3, 0.0, 0.0]),
        "matsumoto": M.matsumoto([0.3, 0.0, 0.0]),
        "perturbed-quartic": M.perturbed_quartic(0.1, [0.0, 0.0, 0.1]),
    }
    names = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'metric':<20}{'grad':<6}" + "".join(f"{n + ' [s]':>14}" for n in names) + f"{'speedup':>10}{'max rel diff':>15}")
    for label, metric in cases.items():
        kind, params = metric.kernel_args()
        drift = np.broadcast_to(np.asarray(metric.reference_drift(), float), Z.shape)
        for grad in (False, True):
            times, outs = [], []
            for n in names:
                fn = kernels.get_backend(n)
                t, out = best_time(lambda: fn(Z, drift, kind, params, n_nodes, grad), repeat)
                times.append(t)
                outs.append(out[0])
            speed = times[0] / times[-1]
            diff = np.max(np.abs(outs[0] - outs[-1]) / np.abs(outs[0]))
            print(f"{label:<20}{str(grad):<6}" + "".join(f"{t:>14.4f}" for t in times) + f"{speed:>10.1f}{diff:>15.2e}")


def bench_solve(rings=16):
    ci = CartanIntegrand(M.randers([0.3, 0.0, 0.0]))
    t, res = best_time(lambda: solve(ci, circle(), rings=rings), 1)
    print(f"plateau solve (randers 0.3, circle, rings={rings}, backend={kernels.BACKEND}): "
          f"{t:.2f} s, area {res.finsler_area:.8f}")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--count", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"active backend: {kernels.BACKEND}; {args.count} normals, 256 nodes")
    bench_backends(args.count, args.repeat)
    bench_solve()


if __name__ == "__main__":
    main()
