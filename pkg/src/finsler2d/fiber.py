"""Fiberwise machinery on a two-dimensional tangent space.

Everything here lives on a single fiber, in polar coordinates
y = (r cos theta, r sin theta), where a metric restricts to F = r f(theta)
for a 2pi-periodic profile f. The central objects:

* profiles (truncated Fourier series, closed-form Riemannian norms, linear
  combinations) with exact theta-derivatives up to third order;
* the coefficient vector K = (K3, K2, K1, K0) extracted from torsion-normalized
  difference data, its cubic p(t) and the trig polynomial
  P(theta) = K3 cos^3 + K2 cos^2 sin + K1 cos sin^2 + K0 sin^3,
  related by P = p(ctg theta) sin^3 theta on (0, pi);
* the scalar fiber equation (f + f'') P = cos f - sin f', whose residual
  drives both the basis verification and the contracted PDE residual
  (the PDE components are u_k = (sin, -cos) multiples of this residual);
* the forced logarithmic slope of the hessian factor h = f + f'' and its
  cumulative quadrature, whose poles or periodicity defects certify that no
  strictly convex fiber-global solution exists.

Grid evaluation dispatches to :mod:`finsler2d.kernels` (numba or numpy).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, SingularIntegrandError, TorsionError

DEFAULT_GRID = 512
POLE_GUARD = 1e-6
DEFAULT_MODES = 64


def theta_grid(n: int = DEFAULT_GRID, lo: float = 0.0, hi: float = 2.0 * np.pi,
               guard: float = POLE_GUARD) -> np.ndarray:
    """Uniform midpoint grid on [lo, hi); points are kept ``guard`` away from
    multiples of pi, where the ctg chart and several integrands degenerate."""
    th = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    k = np.round(th / np.pi)
    near = np.abs(th - k * np.pi) < guard
    th[near] += guard
    return th


# ---------------------------------------------------------------------------
# profiles

class FourierProfile:
    """f(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta).

    Calling the profile evaluates a theta-derivative of the requested order
    (0..3) exactly via coefficient rotation. Profiles support + and scalar *
    (lazily, see :class:`ProfileSum`).
    """

    def __init__(self, a0: float = 0.0, cos_coeffs: Sequence[float] = (),
                 sin_coeffs: Sequence[float] = ()):
        ac = np.asarray(cos_coeffs, dtype=float)
        bs = np.asarray(sin_coeffs, dtype=float)
        n = max(ac.size, bs.size)
        self.a0 = float(a0)
        self.ac = np.zeros(n)
        self.bs = np.zeros(n)
        self.ac[:ac.size] = ac
        self.bs[:bs.size] = bs

    @property
    def n_modes(self) -> int:
        return self.ac.size

    def __call__(self, theta, deriv: int = 0):
        if not 0 <= deriv <= 3:
            raise DomainError("profile derivatives are available for orders 0..3")
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = kernels.fourier_eval(self.a0, self.ac, self.bs, deriv, th)
        return out if np.ndim(theta) else float(out[0])

    def fourier_coefficients(self):
        return self.a0, self.ac.copy(), self.bs.copy()

    def to_fourier(self, n_modes: int | None = None) -> "FourierProfile":
        if n_modes is None or n_modes >= self.n_modes:
            return FourierProfile(self.a0, self.ac, self.bs)
        return FourierProfile(self.a0, self.ac[:n_modes], self.bs[:n_modes])

    def symmetrized(self) -> "FourierProfile":
        """(f(theta) + f(theta + pi))/2: odd modes cancel."""
        ac = self.ac.copy()
        bs = self.bs.copy()
        ac[0::2] = 0.0   # modes 1, 3, 5, ...
        bs[0::2] = 0.0
        return FourierProfile(self.a0, ac, bs)

    @classmethod
    def from_samples(cls, values: np.ndarray, n_modes: int | None = None
                     ) -> "FourierProfile":
        """Project samples on a uniform [0, 2pi) grid (FFT)."""
        values = np.asarray(values, dtype=float)
        m = values.size
        spec = np.fft.rfft(values)
        a0 = spec[0].real / m
        kmax = spec.size - 1 if n_modes is None else min(n_modes, spec.size - 1)
        ac = 2.0 * spec[1:kmax + 1].real / m
        bs = -2.0 * spec[1:kmax + 1].imag / m
        return cls(a0, ac, bs)

    @classmethod
    def from_callable(cls, fn, n_modes: int | None = None,
                      max_modes: int = 1024, tol: float = 1e-13
                      ) -> "FourierProfile":
        """Sample-and-project; the mode count adapts to the measured
        coefficient decay when not given explicitly (tail below tol*scale)."""
        if n_modes is not None:
            m = max(256, 4 * n_modes)
            th = np.arange(m) * 2.0 * np.pi / m
            return cls.from_samples(np.asarray(fn(th), dtype=float), n_modes)
        m = max(4096, 8 * max_modes)
        th = np.arange(m) * 2.0 * np.pi / m
        prof = cls.from_samples(np.asarray(fn(th), dtype=float))
        mags = np.hypot(prof.ac, prof.bs)
        scale = max(abs(prof.a0), mags.max(initial=0.0), 1e-300)
        keep = np.nonzero(mags > tol * scale)[0]
        cut = min(max_modes, (keep.max() + 1) if keep.size else 1)
        return prof.to_fourier(cut)

    def __add__(self, other):
        return ProfileSum([(1.0, self), (1.0, other)])

    def __rmul__(self, w):
        return ProfileSum([(float(w), self)])

    def to_json(self) -> dict:
        return {"a0": self.a0, "cos": self.ac.tolist(), "sin": self.bs.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "FourierProfile":
        return cls(float(data.get("a0", 0.0)), data.get("cos", ()), data.get("sin", ()))


class RiemannianNormProfile:
    """f(theta) = sqrt(g(n, n)) for an SPD 2x2 matrix g, n = (cos, sin).

    Evaluated in closed form; the Fourier projection of this profile decays
    too slowly near degenerate g for a fixed small mode count, so the closed
    form is what the residual checks use. ``to_fourier`` remains available for
    serialization.
    """

    def __init__(self, g: np.ndarray):
        g = np.asarray(g, dtype=float)
        if g.shape != (2, 2):
            raise DomainError("expected a 2x2 matrix")
        if abs(g[0, 1] - g[1, 0]) > 1e-12 * max(1.0, np.abs(g).max()):
            raise DomainError("expected a symmetric matrix")
        if g[0, 0] <= 0.0 or np.linalg.det(g) <= 0.0:
            raise DomainError("expected a positive definite matrix")
        self.g = 0.5 * (g + g.T)

    def __call__(self, theta, deriv: int = 0):
        if not 0 <= deriv <= 3:
            raise DomainError("profile derivatives are available for orders 0..3")
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = kernels.riemannian_profile_eval(
            self.g[0, 0], self.g[0, 1], self.g[1, 1], deriv, th)
        return out if np.ndim(theta) else float(out[0])

    def to_fourier(self, n_modes: int | None = None) -> FourierProfile:
        if n_modes is None:
            return FourierProfile.from_callable(lambda th: self(th))
        return FourierProfile.from_callable(lambda th: self(th), n_modes=n_modes)

    def __add__(self, other):
        return ProfileSum([(1.0, self), (1.0, other)])

    def __rmul__(self, w):
        return ProfileSum([(float(w), self)])


class ProfileSum:
    """Lazy linear combination of profiles."""

    def __init__(self, parts: Iterable[tuple[float, object]]):
        flat = []
        for w, p in parts:
            if isinstance(p, ProfileSum):
                flat.extend((w * wi, pi) for wi, pi in p.parts)
            else:
                flat.append((float(w), p))
        self.parts = flat

    def __call__(self, theta, deriv: int = 0):
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros_like(th)
        for w, p in self.parts:
            out += w * p(th, deriv)
        return out if np.ndim(theta) else float(out[0])

    def to_fourier(self, n_modes: int | None = None) -> FourierProfile:
        return FourierProfile.from_callable(lambda th: self(th), n_modes=n_modes)

    def __add__(self, other):
        return ProfileSum(self.parts + [(1.0, other)])

    def __rmul__(self, w):
        return ProfileSum([(w * wi, pi) for wi, pi in self.parts])


def sin_profile() -> FourierProfile:
    """f(theta) = sin(theta); solves the fiber equation for every K but never
    yields a positive metric on its own."""
    return FourierProfile(0.0, (), (1.0,))


def polar_hessian(profile, r: float, theta: float) -> np.ndarray:
    """Hessian of F = r f(theta) in Cartesian fiber coordinates:
    ((f + f'')/r) * outer(u, u) with u = (sin, -cos)."""
    if r <= 0.0:
        raise DomainError("r must be positive")
    h = (profile(theta) + profile(theta, 2)) / r
    u = np.array([np.sin(theta), -np.cos(theta)])
    return h * np.outer(u, u)


# ---------------------------------------------------------------------------
# K coefficients

@dataclass
class KCoefficients:
    """Cubic data extracted from torsion-normalized difference data."""

    k3: float
    k2: float
    k1: float
    k0: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.k3, self.k2, self.k1, self.k0])

    def scale(self) -> float:
        return max(1.0, float(np.abs(self.array).max()))

    @classmethod
    def from_any(cls, k) -> "KCoefficients":
        if isinstance(k, cls):
            return k
        k = np.asarray(k, dtype=float)
        if k.shape != (4,):
            raise DomainError("K must have four components (K3, K2, K1, K0)")
        return cls(*map(float, k))


def k_from_difference(dd, tol: float = 1e-9) -> KCoefficients:
    """K from difference data whose torsion is already normalized to (1, 0)."""
    tau = dd.torsion_vector()
    if np.abs(tau - np.array([1.0, 0.0])).max() > tol:
        raise TorsionError(
            f"difference data must be torsion-normalized to (1, 0); got tau={tau}")
    g = dd.gamma
    return KCoefficients(
        k3=-g[1, 0, 0],
        k2=g[0, 0, 0] - 2.0 * g[1, 0, 1],
        k1=2.0 * g[0, 0, 1] - g[1, 1, 1],
        k0=g[0, 1, 1])


def difference_from_k(k) -> "DifferenceData":
    """A torsion-normalized representative mapping back onto the given K."""
    from .connections import DifferenceData
    k = KCoefficients.from_any(k)
    gamma = np.zeros((2, 2, 2))
    gamma[1, 0, 0] = -k.k3
    gamma[0, 0, 0] = k.k2
    gamma[0, 0, 1] = gamma[0, 1, 0] = 0.5 * k.k1
    gamma[0, 1, 1] = k.k0
    torsion = np.zeros((2, 2, 2))
    torsion[0, 0, 1] = 1.0
    torsion[0, 1, 0] = -1.0
    return DifferenceData(gamma=gamma, torsion=torsion)


def trig_poly(k, theta):
    """P(theta) = K3 c^3 + K2 c^2 s + K1 c s^2 + K0 s^3."""
    kk = KCoefficients.from_any(k)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = kernels.trig_poly(kk.k3, kk.k2, kk.k1, kk.k0, th)
    return out if np.ndim(theta) else float(out[0])


def cubic_poly(k, t):
    """p(t) = K3 t^3 + K2 t^2 + K1 t + K0; P = p(ctg) sin^3 on (0, pi)."""
    kk = KCoefficients.from_any(k)
    t = np.asarray(t, dtype=float)
    return ((kk.k3 * t + kk.k2) * t + kk.k1) * t + kk.k0


def cubic_poly_prime(k, t):
    kk = KCoefficients.from_any(k)
    t = np.asarray(t, dtype=float)
    return (3.0 * kk.k3 * t + 2.0 * kk.k2) * t + kk.k1


# ---------------------------------------------------------------------------
# residuals

def fiber_equation_residual(profile, k, thetas=None) -> np.ndarray:
    """(f + f'') P - (cos f - sin f') on a theta grid."""
    kk = KCoefficients.from_any(k)
    th = theta_grid() if thetas is None else np.asarray(thetas, dtype=float)
    f = profile(th)
    ft = profile(th, 1)
    ftt = profile(th, 2)
    return kernels.fiber_equation_arrays(kk.k3, kk.k2, kk.k1, kk.k0,
                                         f, ft, ftt, th)


def pde_residual_profile(profile, dd, thetas=None, r: float = 1.0) -> np.ndarray:
    """Contracted linear PDE residual of F = r f(theta) against difference
    data, evaluated on a grid. Shape (2, len(thetas)).

    No torsion normalization is assumed; this is the same quantity as
    :func:`finsler2d.spray.pde_residual` evaluated along the circle of
    directions, computed through closed polar forms.
    """
    th = theta_grid() if thetas is None else np.asarray(thetas, dtype=float)
    f = profile(th)
    ft = profile(th, 1)
    ftt = profile(th, 2)
    tau = dd.torsion_vector()
    return kernels.pde_residual_profile_arrays(dd.gamma, tau, f, ft, ftt, th,
                                               float(r))


# ---------------------------------------------------------------------------
# forced slope of the hessian factor and its quadrature

def log_hess_derivative(k, theta, factorization=None):
    """The slope -(d/d theta) ln(f + f'') forced on any solution.

    Raw form: (P' + sin)/P, with poles at zeros of P. When the factorization
    (B, C, D) of the cubic is supplied (root condition verified), the
    pole-free closed form is used instead; the two agree wherever both are
    finite.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if factorization is None:
        kk = KCoefficients.from_any(k)
        out = kernels.log_hess_slope_raw(kk.k3, kk.k2, kk.k1, kk.k0, th)
    else:
        b, c, d = map(float, factorization)
        out = kernels.log_hess_slope_factored(b, c, d, th)
    return out if np.ndim(theta) else float(out[0])


def poles_in_range(k, lo: float, hi: float, tol: float = 1e-9) -> list[float]:
    """Angles in (lo, hi) where the raw slope has a genuine pole.

    P vanishes at theta = arcctg(t0) mod pi for each real root t0 of the
    cubic, and at multiples of pi when K3 = 0; the pole is genuine when the
    numerator P' + sin does not vanish there too.
    """
    kk = KCoefficients.from_any(k)
    scale = kk.scale()
    cands: list[float] = []
    if abs(kk.k3) > tol * scale:
        roots, cnt = kernels.cubic_real_roots(kk.k3, kk.k2, kk.k1, kk.k0)
        for t0 in roots[:cnt]:
            cands.append(float(np.arctan2(1.0, t0)))   # in (0, pi)
    else:
        cands.append(0.0)
        if abs(kk.k2) > tol * scale:
            # quadratic p: finite roots still map into (0, pi)
            disc = kk.k1 ** 2 - 4.0 * kk.k2 * kk.k0
            if disc >= 0.0:
                for t0 in ((-kk.k1 + np.sqrt(disc)) / (2.0 * kk.k2),
                           (-kk.k1 - np.sqrt(disc)) / (2.0 * kk.k2)):
                    cands.append(float(np.arctan2(1.0, t0)))
    out = []
    for th0 in cands:
        num = (kernels.trig_poly_theta(kk.k3, kk.k2, kk.k1, kk.k0,
                                       np.array([th0]))[0] + np.sin(th0))
        genuine = abs(num) > tol * max(1.0, scale)
        if not genuine:
            continue
        kmin = int(np.ceil((lo - th0) / np.pi))
        kmax = int(np.floor((hi - th0) / np.pi))
        for m in range(kmin, kmax + 1):
            th = th0 + m * np.pi
            if lo < th < hi:
                out.append(th)
    return sorted(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _cumulative_quadrature(fn, chain: np.ndarray) -> np.ndarray:
    """Panel-wise 10-point Gauss-Legendre antiderivative along a sorted chain."""
    a = chain[:-1]
    b = chain[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = fn(pts.ravel()).reshape(pts.shape)
    panel = half * (vals @ _GL_WEIGHTS)
    return np.concatenate([[0.0], np.cumsum(panel)])


def hess_factor_quadrature(k, theta0: float, h0: float, thetas,
                           factorization=None) -> np.ndarray:
    """Reconstruct h = f + f'' on a grid from its forced logarithmic slope:
    h(theta) = h0 * exp(-int_{theta0}^{theta} slope).

    With no factorization the raw integrand is used and any genuine pole in
    the integration range raises :class:`SingularIntegrandError` carrying the
    pole angle; that failure certifies the absence of a fiber-global solution.
    """
    if h0 <= 0.0:
        raise DomainError("h0 must be positive")
    th = np.asarray(thetas, dtype=float)
    if np.any(np.diff(th) <= 0.0):
        raise DomainError("thetas must be strictly increasing")
    lo = min(theta0, th[0])
    hi = max(theta0, th[-1])
    if factorization is None:
        poles = poles_in_range(k, lo - 1e-12, hi + 1e-12)
        if poles:
            raise SingularIntegrandError(
                f"forced slope has a pole at theta = {poles[0]:.6f} inside the "
                f"integration range", location=poles[0])
    chain = np.unique(np.concatenate([[theta0], th]))
    acc = _cumulative_quadrature(
        lambda tt: log_hess_derivative(k, tt, factorization=factorization), chain)
    acc -= acc[np.searchsorted(chain, theta0)]
    vals = acc[np.searchsorted(chain, th)]
    return h0 * np.exp(-vals)


@dataclass
class PeriodicityReport:
    """Obstruction measured on one half-period of ln h."""

    defect: float
    pole: float | None


def periodicity_defect(k, guard: float = POLE_GUARD) -> PeriodicityReport:
    """|ln h(theta + pi) - ln h(theta)| forced by the slope, or the pole that
    prevents the continuation. Solutions require a pi-periodic h, so a nonzero
    defect (or a pole) rules them out."""
    from .classify import cubic_analysis
    analysis = cubic_analysis(k)
    if analysis.factorization is not None and analysis.root_condition:
        span = np.array([guard, guard + np.pi])
        chain = np.linspace(span[0], span[1], 257)
        acc = _cumulative_quadrature(
            lambda tt: log_hess_derivative(k, tt,
                                           factorization=analysis.factorization),
            chain)
        return PeriodicityReport(defect=float(abs(acc[-1])), pole=None)
    poles = poles_in_range(k, guard, guard + np.pi)
    if poles:
        return PeriodicityReport(defect=float("inf"), pole=poles[0])
    # no factorization and no detected pole: fall back to raw integration
    chain = np.linspace(guard, guard + np.pi, 1025)
    acc = _cumulative_quadrature(lambda tt: log_hess_derivative(k, tt), chain)
    return PeriodicityReport(defect=float(abs(acc[-1])), pole=None)


def periodic_basis(k) -> list:
    """Solution basis of the fiber equation for the given K.

    Always contains sin(theta) (a solution for every K, never positive on the
    whole fiber). When K matches the normal form, the norm profile of the
    witness matrix is prepended; every strictly convex fiber-global solution
    is a combination c1 * witness-norm + c2 * sin with c1 > 0.
    """
    from .classify import classify_k
    res = classify_k(k)
    basis: list = []
    if res.verdict == "normal_form":
        basis.append(RiemannianNormProfile(res.witness))
    basis.append(sin_profile())
    return basis


# ---------------------------------------------------------------------------
# spectral solve and profile IO

def profile_from_hess_factor(samples: np.ndarray) -> tuple[FourierProfile, float]:
    """Solve f'' + f = h for a 2pi-periodic f from uniform-grid samples of h.

    Mode k of f is h_k / (1 - k^2); the resonant first harmonic of h must
    vanish for solvability and the corresponding free modes of f are set to
    zero (they parametrize the cos/sin homogeneous solutions, i.e. linear
    functions of y). Returns (profile, first-harmonic magnitude).
    """
    h = FourierProfile.from_samples(np.asarray(samples, dtype=float))
    resonant = float(np.hypot(h.ac[0] if h.n_modes else 0.0,
                              h.bs[0] if h.n_modes else 0.0))
    ac = np.zeros_like(h.ac)
    bs = np.zeros_like(h.bs)
    for idx in range(1, h.n_modes):
        kmode = idx + 1
        ac[idx] = h.ac[idx] / (1.0 - kmode ** 2)
        bs[idx] = h.bs[idx] / (1.0 - kmode ** 2)
    return FourierProfile(h.a0, ac, bs), resonant


def profile_table(profile, thetas=None) -> np.ndarray:
    """Columns (theta, f, f', f + f '') on a grid."""
    th = theta_grid() if thetas is None else np.asarray(thetas, dtype=float)
    f = profile(th)
    ft = profile(th, 1)
    ftt = profile(th, 2)
    return np.column_stack([th, f, ft, f + ftt])


def write_profile_csv(path, profile, thetas=None) -> None:
    table = profile_table(profile, thetas)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "f", "f_theta", "f_plus_ftt"])
        for row in table:
            writer.writerow([repr(float(v)) for v in row])
