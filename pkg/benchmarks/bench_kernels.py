"""Time the compiled and pure-numpy kernel backends on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 3]
"""

import argparse
import time

import numpy as np

from gbo_lab import _kernels
from gbo_lab._kernels import commutator_sums, offset_bilinear


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(n, repeat, rng):
    a, b = rng.standard_normal(n), rng.standard_normal(n)
    table = rng.standard_normal(2 * n + 1)
    q, dq = rng.standard_normal(2 * n), rng.standard_normal(2 * n)
    shifts = np.arange(0, n, max(1, n // 16))
    rows = []
    for name, call in (
        ("offset_bilinear", lambda be: offset_bilinear(a, b, table, n, backend=be)),
        ("commutator_sums", lambda be: commutator_sums(a, b, q, dq, shifts, 0.1, backend=be)),
    ):
        t_np, r_np = best_of(lambda: call("numpy"), repeat)
        if _kernels.HAVE_NUMBA:
            call("numba")                                   # compile outside the timing
            t_nb, r_nb = best_of(lambda: call("numba"), repeat)
            diff = float(np.max(np.abs(np.asarray(r_nb) - np.asarray(r_np))))
        else:
            t_nb, diff = float("nan"), float("nan")
        rows.append((name, n, t_np, t_nb, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba available: {_kernels.HAVE_NUMBA}")
    print(f"{'kernel':<16} {'n':>6} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'max diff':>10}")
    for n in args.sizes:
        for name, size, t_np, t_nb, diff in bench(n, args.repeat, rng):
            print(f"{name:<16} {size:>6} {t_np:>11.4f} {t_nb:>11.4f} {t_np / t_nb:>8.1f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
