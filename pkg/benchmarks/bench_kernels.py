"""Time the grid kernels on both backends.

Run:  python3 benchmarks/bench_kernels.py [grid_size]

Imports both implementations directly (bypassing the FINSLER2D_KERNELS
switch), warms the jit cache, and reports per-call medians.
"""

import sys
import time

import numpy as np

from finsler2d.kernels import _numpy_impl as np_impl

try:
    from finsler2d.kernels import _numba_impl as nb_impl
except ImportError:
    nb_impl = None


def median_time(fn, args, repeats=7, inner=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        times.append((time.perf_counter() - t0) / inner)
    return float(np.median(times))


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    th = (np.arange(m) + 0.5) * 2.0 * np.pi / m
    ac = 0.1 / (1.0 + np.arange(48)) ** 2
    bs = 0.05 / (1.0 + np.arange(48)) ** 2
    f = np_impl.riemannian_profile_eval(1.0, -1.0, 2.0, 0, th)
    ft = np_impl.riemannian_profile_eval(1.0, -1.0, 2.0, 1, th)
    ftt = np_impl.riemannian_profile_eval(1.0, -1.0, 2.0, 2, th)
    gamma = np.array([[[0.3, 0.5], [0.5, -0.1]], [[-1.0, 0.2], [0.2, 0.4]]])
    tau = np.array([1.0, 0.0])

    cases = [
        ("fourier_eval d2", "fourier_eval", (1.2, ac, bs, 2, th)),
        ("riem_profile d3", "riemannian_profile_eval", (1.0, -1.0, 2.0, 3, th)),
        ("trig_poly", "trig_poly", (0.1, 0.0, -0.2, -0.4, th)),
        ("fiber_equation", "fiber_equation_arrays",
         (0.1, 0.0, -0.2, -0.4, f, ft, ftt, th)),
        ("pde_residual", "pde_residual_profile_arrays",
         (gamma, tau, f, ft, ftt, th, 1.0)),
        ("slope_factored", "log_hess_slope_factored", (-1.0, 1.0, -2.0, th)),
    ]

    if nb_impl is not None:
        for _, name, args in cases:
            getattr(nb_impl, name)(*args)          # jit warm-up

    print(f"grid size {m}")
    header = f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, name, args in cases:
        t_np = median_time(getattr(np_impl, name), args)
        if nb_impl is None:
            print(f"{label:<18}{1e3 * t_np:>12.3f}{'n/a':>12}{'':>9}")
            continue
        t_nb = median_time(getattr(nb_impl, name), args)
        print(f"{label:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}"
              f"{t_np / t_nb:>9.2f}")


if __name__ == "__main__":
    main()
