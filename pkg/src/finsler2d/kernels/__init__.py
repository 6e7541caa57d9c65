"""Grid kernels with a numba fast path and a pure-numpy fallback.

Backend selection happens once at import, driven by the FINSLER2D_KERNELS
environment variable:

* ``auto`` (default): numba when importable, numpy otherwise
* ``numba``: require the njit path, raise if numba is unavailable
* ``numpy``: force the pure-numpy reference path

``BACKEND`` names the active choice. Both implementations are importable
directly (``_numpy_impl``, ``_numba_impl``) for agreement tests and benchmarks.
"""

import os

from . import _numpy_impl

_EXPORTED = [
    "fourier_eval",
    "riemannian_profile_eval",
    "trig_poly",
    "trig_poly_theta",
    "fiber_equation_arrays",
    "pde_residual_profile_arrays",
    "log_hess_slope_raw",
    "log_hess_slope_factored",
    "cubic_real_roots",
]


def _load_backend(choice: str):
    choice = choice.lower().strip()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"FINSLER2D_KERNELS must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return _numpy_impl
    try:
        from . import _numba_impl
        return _numba_impl
    except ImportError:
        if choice == "numba":
            raise
        return _numpy_impl


_impl = _load_backend(os.environ.get("FINSLER2D_KERNELS", "auto"))
BACKEND = _impl.BACKEND_NAME

fourier_eval = _impl.fourier_eval
riemannian_profile_eval = _impl.riemannian_profile_eval
trig_poly = _impl.trig_poly
trig_poly_theta = _impl.trig_poly_theta
fiber_equation_arrays = _impl.fiber_equation_arrays
pde_residual_profile_arrays = _impl.pde_residual_profile_arrays
log_hess_slope_raw = _impl.log_hess_slope_raw
log_hess_slope_factored = _impl.log_hess_slope_factored
cubic_real_roots = _impl.cubic_real_roots


def warm_up() -> None:
    """Trigger jit compilation (no-op on the numpy backend)."""
    import numpy as np

    th = np.array([0.3, 1.1])
    one = np.array([1.0])
    fourier_eval(1.0, one, one, 2, th)
    riemannian_profile_eval(1.0, 0.1, 2.0, 3, th)
    trig_poly(1.0, 0.0, 1.0, 0.0, th)
    trig_poly_theta(1.0, 0.0, 1.0, 0.0, th)
    f = np.ones(2)
    fiber_equation_arrays(1.0, 0.0, 1.0, 0.0, f, f, f, th)
    pde_residual_profile_arrays(np.zeros((2, 2, 2)), np.array([1.0, 0.0]),
                                f, f, f, th, 1.0)
    log_hess_slope_raw(1.0, 0.0, 1.0, 0.0, th)
    log_hess_slope_factored(0.0, 1.0, 0.0, th)
    cubic_real_roots(1.0, 0.0, 1.0, 0.0)
