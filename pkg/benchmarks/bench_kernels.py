"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from probmax._backend import available, load
from probmax.harness.examples import example1
from probmax.oracle import draw_normals, make_stream, reduce_batch
from probmax.solvers import SolverSchedule, run_msa


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(kernels):
    spec = example1()
    x = np.array([0.6, 0.7, 0.5])
    xi = draw_normals(make_stream(0), 100_000, 3)
    ys = make_stream(1).normal(0.0, 3.0, (1000, 3))
    A, b = spec.feasible.A, spec.feasible.b
    sched = SolverSchedule.msa(budget=10_000)

    def project_many():
        for y in ys:
            kernels.project_polytope(A, b, y)

    return {
        "smoothed value+gradient, N=1e5": lambda: reduce_batch(x, xi, spec, kernels=kernels),
        "plain value, N=1e5": lambda: reduce_batch(x, xi, spec, smooth=False, kernels=kernels),
        "polytope projection x1000": project_many,
        "m-SA run, M=1e4": lambda: run_msa(spec, sched, seed=0, kernels=kernels),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write the timings here")
    args = p.parse_args(argv)

    results = {}
    for name in available():
        k = load(name)
        results[name] = {label: _best(fn, args.repeat) for label, fn in cases(k).items()}

    labels = list(next(iter(results.values())))
    names = list(results)
    print(f"{'kernel':<34}" + "".join(f"{n:>12}" for n in names)
          + ("     speedup" if len(names) > 1 else ""))
    for label in labels:
        row = f"{label:<34}" + "".join(f"{results[n][label] * 1e3:>10.2f}ms" for n in names)
        if len(names) > 1:
            row += f"{results['python'][label] / results['cython'][label]:>11.1f}x"
        print(row)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
