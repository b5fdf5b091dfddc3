"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba variants are warmed up once before timing so that compilation is
not counted.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from tanconn import _kernels as kn


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kn.subset_mul_numba is None:
        print("numba is not installed; only the numpy path is available")
        return

    rng = np.random.default_rng(0)
    cases = []
    for depth, width in [(2, 4096), (3, 4096), (4, 1024)]:
        a, b = rng.normal(size=(2, 1 << depth, width))
        cases.append((f"subset_mul depth={depth} width={width}",
                      lambda a=a, b=b: kn.subset_mul_numpy(a, b),
                      lambda a=a, b=b: kn.subset_mul_numba(a, b),
                      lambda: np.max(np.abs(kn.subset_mul_numpy(a, b) - kn.subset_mul_numba(a, b)))))
    e0 = np.array([0.0, 1.0, 0.0])
    for steps in (20_000, 200_000):
        cases.append((f"sphere transport rk4 steps={steps}",
                      lambda s=steps: kn.sphere_transport_numpy(1.0, e0, s, "rk4"),
                      lambda s=steps: kn.sphere_transport_numba(1.0, e0, s, "rk4"),
                      lambda s=steps: np.max(np.abs(kn.sphere_transport_numpy(1.0, e0, s, "rk4")
                                                    - kn.sphere_transport_numba(1.0, e0, s, "rk4")))))

    print(f"{'case':<40} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8} {'max diff':>10}")
    for label, slow, fast, diff in cases:
        fast()  # compile
        t_np, t_nb = best_of(slow, args.repeat), best_of(fast, args.repeat)
        print(f"{label:<40} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff():10.2e}")


if __name__ == "__main__":
    main()
