"""numba @njit twins of the grid kernels in ``_numpy_impl``.

Fused per-point loops; no temporaries. fastmath stays off so the two backends
agree to roundoff.
"""

import numpy as np
from numba import njit

BACKEND_NAME = "numba"


@njit(cache=True)
def fourier_eval(a0, ac, bs, deriv, theta):
    n = ac.size
    aw = ac.astype(np.float64).copy()
    bw = bs.astype(np.float64).copy()
    for _ in range(deriv):
        for k in range(n):
            kk = k + 1.0
            na = kk * bw[k]
            nb = -kk * aw[k]
            aw[k] = na
            bw[k] = nb
    base = a0 if deriv == 0 else 0.0
    out = np.empty(theta.size)
    for m in range(theta.size):
        acc = base
        t = theta[m]
        for k in range(n):
            kt = (k + 1.0) * t
            acc += aw[k] * np.cos(kt) + bw[k] * np.sin(kt)
        out[m] = acc
    return out


@njit(cache=True)
def riemannian_profile_eval(g11, g12, g22, deriv, theta):
    m = 0.5 * (g11 + g22)
    al = 0.5 * (g11 - g22)
    be = g12
    out = np.empty(theta.size)
    for i in range(theta.size):
        c2 = np.cos(2.0 * theta[i])
        s2 = np.sin(2.0 * theta[i])
        q = m + al * c2 + be * s2
        f = np.sqrt(q)
        if deriv == 0:
            out[i] = f
            continue
        q1 = -2.0 * al * s2 + 2.0 * be * c2
        if deriv == 1:
            out[i] = q1 / (2.0 * f)
            continue
        q2 = -4.0 * (q - m)
        if deriv == 2:
            out[i] = q2 / (2.0 * f) - q1 * q1 / (4.0 * q * f)
            continue
        q3 = -4.0 * q1
        out[i] = (q3 / (2.0 * f)
                  - 3.0 * q1 * q2 / (4.0 * q * f)
                  + 3.0 * q1 ** 3 / (8.0 * q * q * f))
    return out


@njit(cache=True)
def trig_poly(k3, k2, k1, k0, theta):
    out = np.empty(theta.size)
    for i in range(theta.size):
        c = np.cos(theta[i])
        s = np.sin(theta[i])
        out[i] = ((k3 * c + k2 * s) * c + k1 * s * s) * c + k0 * s ** 3
    return out


@njit(cache=True)
def trig_poly_theta(k3, k2, k1, k0, theta):
    out = np.empty(theta.size)
    for i in range(theta.size):
        c = np.cos(theta[i])
        s = np.sin(theta[i])
        out[i] = (-3.0 * k3 * c * c * s
                  + k2 * (c ** 3 - 2.0 * c * s * s)
                  + k1 * (2.0 * c * c * s - s ** 3)
                  + 3.0 * k0 * s * s * c)
    return out


@njit(cache=True)
def fiber_equation_arrays(k3, k2, k1, k0, f, ft, ftt, theta):
    out = np.empty(theta.size)
    for i in range(theta.size):
        c = np.cos(theta[i])
        s = np.sin(theta[i])
        p = ((k3 * c + k2 * s) * c + k1 * s * s) * c + k0 * s ** 3
        out[i] = (f[i] + ftt[i]) * p - (c * f[i] - s * ft[i])
    return out


@njit(cache=True)
def pde_residual_profile_arrays(gamma, tau, f, ft, ftt, theta, r):
    out = np.empty((2, theta.size))
    for m in range(theta.size):
        c = np.cos(theta[m])
        s = np.sin(theta[m])
        gq0 = (gamma[0, 0, 0] * c * c + (gamma[0, 0, 1] + gamma[0, 1, 0]) * c * s
               + gamma[0, 1, 1] * s * s)
        gq1 = (gamma[1, 0, 0] * c * c + (gamma[1, 0, 1] + gamma[1, 1, 0]) * c * s
               + gamma[1, 1, 1] * s * s)
        h = f[m] + ftt[m]
        w0 = c * f[m] - s * ft[m]
        w1 = s * f[m] + c * ft[m]
        bracket = h * (s * gq0 - c * gq1) - (w0 * tau[0] + w1 * tau[1])
        out[0, m] = r * s * bracket
        out[1, m] = -r * c * bracket
    return out


@njit(cache=True)
def log_hess_slope_raw(k3, k2, k1, k0, theta):
    out = np.empty(theta.size)
    for i in range(theta.size):
        c = np.cos(theta[i])
        s = np.sin(theta[i])
        p = ((k3 * c + k2 * s) * c + k1 * s * s) * c + k0 * s ** 3
        pt = (-3.0 * k3 * c * c * s
              + k2 * (c ** 3 - 2.0 * c * s * s)
              + k1 * (2.0 * c * c * s - s ** 3)
              + 3.0 * k0 * s * s * c)
        out[i] = (pt + s) / p
    return out


@njit(cache=True)
def log_hess_slope_factored(b, cc, d, theta):
    out = np.empty(theta.size)
    for i in range(theta.size):
        c = np.cos(theta[i])
        s = np.sin(theta[i])
        num = (b * b + cc - 1.0) * c * s - 2.0 * b * c * c + d
        den = (c - b * s) ** 2 + cc * s * s
        out[i] = 3.0 * num / den
    return out


@njit(cache=True)
def _cbrt(x):
    return np.copysign(np.abs(x) ** (1.0 / 3.0), x)


@njit(cache=True)
def cubic_real_roots(c3, c2, c1, c0):
    roots = np.full(3, np.nan)
    a = c2 / c3
    b = c1 / c3
    c = c0 / c3
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    shift = a / 3.0
    disc = 0.25 * q * q + p ** 3 / 27.0
    scale = max(q * q, abs(p) ** 3 * (4.0 / 27.0), 1e-300)
    if disc > 1e-13 * scale:
        sq = np.sqrt(disc)
        rr = -0.5 * q
        big = rr + sq if rr >= 0.0 else rr - sq
        aa = _cbrt(big)
        bb = 0.0 if aa == 0.0 else -p / (3.0 * aa)
        roots[0] = aa + bb - shift
        return roots, 1
    if disc < -1e-13 * scale:
        m = 2.0 * np.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        phi = np.arccos(arg)
        for k in range(3):
            roots[k] = m * np.cos((phi - 2.0 * np.pi * k) / 3.0) - shift
        return roots, 3
    if abs(p) ** 3 <= 1e-13 * scale or p == 0.0:
        roots[0] = -shift
        return roots, 1
    roots[0] = 3.0 * q / p - shift
    roots[1] = -1.5 * q / p - shift
    return roots, 2
