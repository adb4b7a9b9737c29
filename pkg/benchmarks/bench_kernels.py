"""Timing comparison of the compiled kernel extension vs the NumPy path.

Both backends produce the same cross matrices (the parity tests pin the
agreement to 1e-12); this script answers the remaining question, namely
which one to prefer where. Run it from the repository root:

    python3 benchmarks/bench_kernels.py

A machine without the compiled extension reports the NumPy timings only.
"""

import time

import numpy as np

from bincalib import KernelSpec, backend
from bincalib.kernels import _cross_numpy, cross


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    rng = np.random.default_rng(0)
    specs = [
        ("rbf phi=21", KernelSpec.rbf(21.0)),
        ("matern nu=1.5 rho=0.5", KernelSpec.matern(nu=1.5, rho=0.5)),
        ("matern nu=2.5 rho=0.5", KernelSpec.matern(nu=2.5, rho=0.5)),
    ]
    shapes = [(200, 200, 2), (1000, 500, 2), (2000, 2000, 4),
              (10000, 400, 2)]
    compiled = backend() == "compiled"
    print(f"active backend: {backend()}")
    if not compiled:
        print("compiled extension unavailable; timing the NumPy path only")
    header = f"{'kernel':<24}{'shape':<18}{'numpy':>10}"
    if compiled:
        header += f"{'compiled':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, spec in specs:
        for m, n, d in shapes:
            a = rng.uniform(size=(m, d))
            b = rng.uniform(size=(n, d))
            t_np = best_of(lambda: _cross_numpy(spec, a, b))
            line = f"{label:<24}{f'{m}x{n} d={d}':<18}{t_np * 1e3:>8.1f}ms"
            if compiled:
                t_c = best_of(lambda: cross(spec, a, b))
                line += f"{t_c * 1e3:>8.1f}ms{t_np / t_c:>8.1f}x"
            print(line)


if __name__ == "__main__":
    main()
