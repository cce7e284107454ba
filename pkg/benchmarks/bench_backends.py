"""Compare the numba and pure-numpy backends on the hot operations.

Run twice, once per backend:

    python benchmarks/bench_backends.py
    NLDENOISE_NO_NUMBA=1 python benchmarks/bench_backends.py

The backend is fixed at import time, so a single process cannot time both.
The benchmarked pieces are exactly the loops that live in the dual-backend
module: window spreading/gathering (inside the fast Gauss transform),
the direct Gauss transform, and dense kernel assembly.
"""

import time

import numpy as np

from nldenoise import backend_name
from nldenoise.kernel import AnovaOperator
from nldenoise.transform import (
    FastsumPlan,
    gauss_transform_direct,
    gauss_transform_fast,
)


def timed(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    print(f"backend: {backend_name()}")
    print(f"{'operation':<40}{'n':>8}{'time':>12}")
    rng = np.random.default_rng(0)

    for d in (1, 3):
        for n in (4096, 16384):
            pts = rng.uniform(0, 255, size=(n, d))
            alpha = rng.standard_normal(n)
            plan = FastsumPlan.build(pts, 1.0 / 40.0 ** 2)
            tables = plan.tables_for(pts)

            def apply_fast():
                gauss_transform_fast(pts, pts, alpha, plan,
                                     source_tables=tables,
                                     target_tables=tables)

            apply_fast()  # jit warm-up on the numba backend
            print(f"{f'fast Gauss transform (d={d})':<40}{n:>8}"
                  f"{timed(apply_fast):>11.3f}s")

    for n in (1000, 3000):
        feats = rng.uniform(0, 255, size=(n, 3))
        alpha = rng.standard_normal(n)
        gauss_transform_direct(feats, feats, alpha, 1e-3)
        print(f"{'direct Gauss transform (d=3)':<40}{n:>8}"
              f"{timed(lambda: gauss_transform_direct(feats, feats, alpha, 1e-3)):>11.3f}s")
        print(f"{'dense kernel assembly (d=3)':<40}{n:>8}"
              f"{timed(lambda: AnovaOperator(feats, [np.arange(3)], 40.0, mode='exact').assemble_dense(), 2):>11.3f}s")


if __name__ == "__main__":
    main()
