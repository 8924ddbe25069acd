"""Compare the numba and numpy kernel backends on the heat-trace hot loops.

Run:  python benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

import argparse
import time

import numpy as np

from spectral_asymptotics import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=2**22)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    k = np.arange(1, args.size + 1, dtype=np.float64)
    zeros = np.zeros_like(k)
    ones = np.ones_like(k)
    cases = {
        "heat n=0 real": lambda impl: impl(k, zeros, ones, 1e-6, 0, 0.0),
        "heat n=1 complex": lambda impl: impl(k, k, ones, 1e-6, 1, 0.0),
        "power q=1.01": None,
    }
    if not _kernels.HAS_JIT:
        print("numba unavailable: only the numpy backend can be timed")
    print(f"{'kernel':<20}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  max |diff|")
    for name, case in cases.items():
        if case is None:
            np_fn = lambda: _kernels._power_chunks_numpy(k, zeros, ones, 1.01, 0.0)  # noqa: E731
            jit_fn = (lambda: _kernels._power_chunks_jit(k, zeros, ones, 1.01, 0.0)) if _kernels.HAS_JIT else None  # noqa: E731
        else:
            np_fn = lambda case=case: case(_kernels._heat_chunks_numpy)  # noqa: E731
            jit_fn = (lambda case=case: case(_kernels._heat_chunks_jit)) if _kernels.HAS_JIT else None  # noqa: E731
        t_np, out_np = best_of(np_fn, args.repeat)
        if jit_fn is None:
            print(f"{name:<20}{t_np:>12.4f}{'-':>12}{'-':>10}")
            continue
        jit_fn()  # compile outside the timing
        t_jit, out_jit = best_of(jit_fn, args.repeat)
        diff = float(np.max(np.abs(np.asarray(out_np) - np.asarray(out_jit))))
        print(f"{name:<20}{t_np:>12.4f}{t_jit:>12.4f}{t_np / t_jit:>10.1f}  {diff:.3g}")

    t_np, p_np = best_of(lambda: _kernels._sieve_numpy(10**7), 1)
    if _kernels.HAS_JIT:
        _kernels._sieve_jit(100)
        t_jit, p_jit = best_of(lambda: _kernels._sieve_jit(10**7), args.repeat)
        same = np.array_equal(p_np, p_jit)
        print(f"{'sieve 1e7':<20}{t_np:>12.4f}{t_jit:>12.4f}{t_np / t_jit:>10.1f}  identical={same}")
    else:
        print(f"{'sieve 1e7':<20}{t_np:>12.4f}")


if __name__ == "__main__":
    main()
