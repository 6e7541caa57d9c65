"""Pure-numpy reference implementations of the grid kernels.

Every function here has an njit twin in ``_numba_impl``; the two must agree to
floating-point roundoff. Signatures take plain ndarrays/floats only.
"""

import numpy as np

BACKEND_NAME = "numpy"


def _rotated_coeffs(ac, bs, deriv):
    # d/dtheta maps (a_k, b_k) -> (k b_k, -k a_k) per mode
    aw = np.asarray(ac, dtype=float).copy()
    bw = np.asarray(bs, dtype=float).copy()
    k = np.arange(1, aw.size + 1, dtype=float)
    for _ in range(deriv):
        aw, bw = k * bw, -k * aw
    return aw, bw


def fourier_eval(a0, ac, bs, deriv, theta):
    """Evaluate d^deriv/dtheta^deriv of a0 + sum_k (a_k cos k t + b_k sin k t)."""
    theta = np.asarray(theta, dtype=float)
    aw, bw = _rotated_coeffs(ac, bs, deriv)
    if aw.size == 0:
        out = np.zeros_like(theta)
    else:
        k = np.arange(1, aw.size + 1, dtype=float)
        kt = np.multiply.outer(theta, k)
        out = np.cos(kt) @ aw + np.sin(kt) @ bw
    if deriv == 0:
        out = out + a0
    return out


def riemannian_profile_eval(g11, g12, g22, deriv, theta):
    """Closed-form theta-derivatives (order 0..3) of f = sqrt(g(n, n)), n = (cos, sin)."""
    theta = np.asarray(theta, dtype=float)
    m = 0.5 * (g11 + g22)
    al = 0.5 * (g11 - g22)
    be = g12
    c2 = np.cos(2.0 * theta)
    s2 = np.sin(2.0 * theta)
    q = m + al * c2 + be * s2
    f = np.sqrt(q)
    if deriv == 0:
        return f
    q1 = -2.0 * al * s2 + 2.0 * be * c2
    if deriv == 1:
        return q1 / (2.0 * f)
    q2 = -4.0 * (q - m)
    if deriv == 2:
        return q2 / (2.0 * f) - q1 * q1 / (4.0 * q * f)
    q3 = -4.0 * q1
    return (q3 / (2.0 * f)
            - 3.0 * q1 * q2 / (4.0 * q * f)
            + 3.0 * q1 ** 3 / (8.0 * q * q * f))


def trig_poly(k3, k2, k1, k0, theta):
    """P(theta) = k3 c^3 + k2 c^2 s + k1 c s^2 + k0 s^3."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    return ((k3 * c + k2 * s) * c + k1 * s * s) * c + k0 * s ** 3


def trig_poly_theta(k3, k2, k1, k0, theta):
    """d/dtheta of trig_poly."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    return (-3.0 * k3 * c * c * s
            + k2 * (c ** 3 - 2.0 * c * s * s)
            + k1 * (2.0 * c * c * s - s ** 3)
            + 3.0 * k0 * s * s * c)


def fiber_equation_arrays(k3, k2, k1, k0, f, ft, ftt, theta):
    """Residual (f + f'')*P - (cos f - sin f') on a grid of fiber angles."""
    theta = np.asarray(theta, dtype=float)
    p = trig_poly(k3, k2, k1, k0, theta)
    return (f + ftt) * p - (np.cos(theta) * f - np.sin(theta) * ft)


def pde_residual_profile_arrays(gamma, tau, f, ft, ftt, theta, r):
    """Contracted linear PDE residual for a profile metric F = r f(theta).

    Components come out proportional to u = (sin, -cos):
    res_k = r * u_k * [(f + f'') * (u . Gq) - (F_y . tau)], Gq^i = gamma^i_jk n^j n^k.
    Returns shape (2, len(theta)).
    """
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    n = np.stack([c, s])                      # (2, M)
    u = np.stack([s, -c])
    gq = np.einsum("ijk,jm,km->im", gamma, n, n)
    h = f + ftt
    w0 = c * f - s * ft
    w1 = s * f + c * ft
    bracket = h * (u[0] * gq[0] + u[1] * gq[1]) - (w0 * tau[0] + w1 * tau[1])
    return r * u * bracket


def log_hess_slope_raw(k3, k2, k1, k0, theta):
    """(P' + sin)/P; equals -(ln(f+f''))' along solutions. Poles where P = 0."""
    theta = np.asarray(theta, dtype=float)
    p = trig_poly(k3, k2, k1, k0, theta)
    pt = trig_poly_theta(k3, k2, k1, k0, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (pt + np.sin(theta)) / p


def log_hess_slope_factored(b, cc, d, theta):
    """Same slope through the factored cubic (valid when the root condition holds).

    3*((b^2+cc-1)*cos*sin - 2*b*cos^2 + d) / ((cos - b*sin)^2 + cc*sin^2),
    smooth on the whole circle since the denominator never vanishes for cc > 0.
    """
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    num = (b * b + cc - 1.0) * c * s - 2.0 * b * c * c + d
    den = (c - b * s) ** 2 + cc * s * s
    return 3.0 * num / den


def _cbrt(x):
    return np.copysign(np.abs(x) ** (1.0 / 3.0), x)


def cubic_real_roots(c3, c2, c1, c0):
    """Real roots of c3 t^3 + c2 t^2 + c1 t + c0, c3 != 0, closed form.

    Returns (roots, count); roots[count:] are nan. Multiple roots are
    reported once (count reflects distinct roots).
    """
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
        # one real root, stable Cardano
        sq = np.sqrt(disc)
        rr = -0.5 * q
        big = rr + sq if rr >= 0.0 else rr - sq
        aa = _cbrt(big)
        bb = 0.0 if aa == 0.0 else -p / (3.0 * aa)
        roots[0] = aa + bb - shift
        return roots, 1
    if disc < -1e-13 * scale:
        # three distinct real roots, trigonometric branch (p < 0 here)
        m = 2.0 * np.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        phi = np.arccos(arg)
        for k in range(3):
            roots[k] = m * np.cos((phi - 2.0 * np.pi * k) / 3.0) - shift
        return roots, 3
    # boundary: multiple roots
    if abs(p) ** 3 <= 1e-13 * scale or p == 0.0:
        roots[0] = -shift
        return roots, 1
    roots[0] = 3.0 * q / p - shift          # simple root
    roots[1] = -1.5 * q / p - shift         # double root
    return roots, 2
