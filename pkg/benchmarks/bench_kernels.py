"""Time the jitted phase kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--repeats 5]

Both backends compute the same heat/phase accumulation; the jit removes the
chunked temporaries but both are dominated by complex exponentials, so
expect a modest (not order-of-magnitude) edge.  SEWKIT_NO_NUMBA=1 makes the
package dispatch to the numpy path everywhere; this script times both
explicitly regardless of the flag.
"""

import argparse
import time

import numpy as np

from sewkit import _kernels


def best_of(fn, args, repeats):
    fn(*args)  # warm-up (and jit compile)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    sizes = [(256, 512), (256, 4096), (1024, 2048), (4096, 2048)]
    print(f"numba available: {_kernels.HAS_NUMBA}")
    print(f"{'freqs':>6} {'cells':>6} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>8}")
    for n_freq, n_cells in sizes:
        xi = np.linspace(-60.0, 60.0, n_freq)
        rho = np.abs(rng.standard_normal(n_cells)) * 1e-3
        shift = rng.standard_normal(n_cells)
        weight = np.full(n_cells, 1.0 / n_cells)
        t_np = best_of(_kernels.heat_phase_sum_1d_numpy,
                       (xi, rho, shift, weight), args.repeats)
        if _kernels.HAS_NUMBA:
            t_nb = best_of(_kernels.heat_phase_sum_1d_numba,
                           (xi, rho, shift, weight), args.repeats)
            a = _kernels.heat_phase_sum_1d_numpy(xi, rho, shift, weight)
            b = _kernels.heat_phase_sum_1d_numba(xi, rho, shift, weight)
            assert np.allclose(a, b, rtol=1e-12), "backends disagree"
            print(f"{n_freq:>6} {n_cells:>6} {t_np*1e3:>12.3f} {t_nb*1e3:>12.3f} "
                  f"{t_np/t_nb:>8.2f}")
        else:
            print(f"{n_freq:>6} {n_cells:>6} {t_np*1e3:>12.3f} {'-':>12} {'-':>8}")


if __name__ == "__main__":
    main()
