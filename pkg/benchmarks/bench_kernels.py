"""Time the pixel kernels with and without numba.

    python3 benchmarks/bench_kernels.py [--size 256]

The two paths must agree bit for bit; the script checks that too.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from fragdyn import kernels
from fragdyn.poly import model
from fragdyn.schwarz import cubic_example


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256)
    args = ap.parse_args()
    n = args.size
    m = model("Q")
    f = cubic_example()
    cases = {
        "escape Q": (lambda nb: kernels.escape_time_grid(
            m.coeffs, *kernels.pixel_grid(0j, 3.2, n, n), m.escape_radius, 500, nb)),
        "schwarz d=3": (lambda nb: kernels.schwarz_grid(
            f.laurent, *kernels.pixel_grid(0j, 4.0, n, n), 1e3, 60, nb)),
    }
    print(f"grid {n}x{n}, numba available: {kernels.USE_NUMBA}")
    for name, run in cases.items():
        t_np, a = _time(lambda: run(False), 1)
        if kernels.USE_NUMBA:
            run(True)  # compile
            t_nb, b = _time(lambda: run(True))
            pairs = zip(a, b) if isinstance(a, tuple) else [(a, b)]
            same = all(np.array_equal(x, y) for x, y in pairs)
            print(f"{name:12s} numpy {t_np:8.3f}s  numba {t_nb:8.3f}s  "
                  f"speedup {t_np / t_nb:6.1f}x  identical={same}")
        else:
            print(f"{name:12s} numpy {t_np:8.3f}s")


if __name__ == "__main__":
    main()
