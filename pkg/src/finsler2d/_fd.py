"""Central finite differences with one Richardson extrapolation level.

Used as the derivative engine for black-box metrics and as the independent
cross-check path for the analytic variants. Base steps: 1e-4*|y| for first and
second order. Third-order tensors use a nested scheme with a larger outer step
(5e-3*|y|, inner Hessian step 1e-3*|y|); at 1e-4 the h^3 roundoff floor sits
near 1e-3 absolute, which would swamp the agreement tolerances.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

BASE_STEP = 1e-4
THIRD_OUTER_STEP = 5e-3
THIRD_INNER_STEP = 1e-3
X_STEP = 1e-5


def _richardson(d_h: np.ndarray, d_h2: np.ndarray) -> np.ndarray:
    # both stencils carry even error series; one level removes the h^2 term
    return (4.0 * d_h2 - d_h) / 3.0


def gradient(fn: Callable[[np.ndarray], float], y: np.ndarray,
             step: float | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    h = (BASE_STEP if step is None else step) * max(np.linalg.norm(y), 1e-6)
    n = y.size

    def central(hh: float) -> np.ndarray:
        out = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = hh
            out[i] = (fn(y + e) - fn(y - e)) / (2.0 * hh)
        return out

    return _richardson(central(h), central(h / 2.0))


def hessian(fn: Callable[[np.ndarray], float], y: np.ndarray,
            step: float | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    h = (BASE_STEP if step is None else step) * max(np.linalg.norm(y), 1e-6)
    n = y.size
    f0 = fn(y)

    def central(hh: float) -> np.ndarray:
        out = np.empty((n, n))
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = hh
            out[i, i] = (fn(y + ei) - 2.0 * f0 + fn(y - ei)) / hh ** 2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = hh
                out[i, j] = out[j, i] = (
                    fn(y + ei + ej) - fn(y + ei - ej)
                    - fn(y - ei + ej) + fn(y - ei - ej)) / (4.0 * hh ** 2)
        return out

    return _richardson(central(h), central(h / 2.0))


def third(fn: Callable[[np.ndarray], float], y: np.ndarray) -> np.ndarray:
    """Third-derivative tensor as the outer central difference of the Hessian."""
    y = np.asarray(y, dtype=float)
    scale = max(np.linalg.norm(y), 1e-6)
    h3 = THIRD_OUTER_STEP * scale
    n = y.size

    def central(hh: float) -> np.ndarray:
        out = np.empty((n, n, n))
        for k in range(n):
            ek = np.zeros(n)
            ek[k] = hh
            hp = hessian(fn, y + ek, step=THIRD_INNER_STEP)
            hm = hessian(fn, y - ek, step=THIRD_INNER_STEP)
            out[:, :, k] = (hp - hm) / (2.0 * hh)
        return out

    t = _richardson(central(h3), central(h3 / 2.0))
    # symmetrize: the stencil is exactly symmetric in (i, j) but only
    # approximately in the k slot
    return (t + t.transpose(0, 2, 1) + t.transpose(2, 1, 0)
            + t.transpose(1, 0, 2) + t.transpose(1, 2, 0)
            + t.transpose(2, 0, 1)) / 6.0


def x_partials(fn: Callable[[np.ndarray], np.ndarray | float], x: np.ndarray,
               step: float | None = None) -> np.ndarray:
    """Stack of d(fn)/dx^l over l; fn may be scalar- or array-valued.

    Output shape: (n_x,) + shape(fn(x)).
    """
    x = np.asarray(x, dtype=float)
    h = (X_STEP if step is None else step) * max(1.0, np.linalg.norm(x))
    n = x.size

    def central(hh: float) -> np.ndarray:
        rows = []
        for l in range(n):
            e = np.zeros(n)
            e[l] = hh
            rows.append((np.asarray(fn(x + e), dtype=float)
                         - np.asarray(fn(x - e), dtype=float)) / (2.0 * hh))
        return np.stack(rows)

    return _richardson(central(h), central(h / 2.0))
