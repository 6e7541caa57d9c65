"""Finsler metric variants and their derivative engines.

A metric is a positively 1-homogeneous F(x, y) > 0 on the slit tangent bundle
whose fundamental tensor g_ij = (1/2) d^2 F^2 / dy^i dy^j is symmetric positive
definite. Four variants are provided:

* :class:`RiemannianMetric`     F = sqrt(a_ij(x) y^i y^j)
* :class:`RandersMetric`        F = alpha + beta, beta a one-form with
                                alpha-norm < 1
* :class:`FiberProfileMetric`   two-dimensional, F = r f(theta) for a periodic
                                profile f
* :class:`BlackBoxMetric`       arbitrary callable, derivatives by central
                                finite differences with one Richardson level

The analytic variants carry closed-form y-derivatives up to third order; the
finite-difference engine doubles as an independent cross-check path for them.
x-derivatives of the energy E = F^2/2 always go through central differences in
the chart (step 1e-5), except for x-independent metrics where they vanish
identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _fd
from .errors import DomainError, InvalidMetricError, NonConvexError

ZERO_TOL = 1e-8      # vectors shorter than this are rejected
SPD_TOL = 1e-10      # leading-minor threshold for positive definiteness
HOMOGENEITY_SAMPLES = 32


def is_spd(m: np.ndarray, tol: float = SPD_TOL) -> bool:
    """Positive definiteness by leading principal minors.

    Minor k is compared against tol * scale^k with scale = max(1, max|m_ij|),
    so the verdict does not depend on an overall rescaling of well-conditioned
    input.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMetricError("expected a square matrix")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-9 * max(1.0, np.abs(m).max())):
        return False
    scale = max(1.0, np.abs(m).max())
    for k in range(1, m.shape[0] + 1):
        if np.linalg.det(m[:k, :k]) <= tol * scale ** k:
            return False
    return True


def spd_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of an SPD matrix via eigendecomposition."""
    w, v = np.linalg.eigh(np.asarray(m, dtype=float))
    if w.min() <= 0.0:
        raise NonConvexError("matrix is not positive definite")
    return (v * np.sqrt(w)) @ v.T


@dataclass
class FundamentalTensor:
    """g_ij at a point (x, y) together with the energy E = F^2/2 there."""

    g: np.ndarray
    E: float

    def is_spd(self, tol: float = SPD_TOL) -> bool:
        return is_spd(self.g, tol)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.g).min())


@dataclass
class ConvexityReport:
    strictly_convex: bool
    min_eigenvalue: float
    worst_direction: np.ndarray


def _check_y(y: np.ndarray, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DomainError(f"expected a vector of length {n}, got shape {y.shape}")
    if np.linalg.norm(y) <= ZERO_TOL:
        raise DomainError("y is too close to the zero vector")
    return y


def _check_x(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DomainError(f"expected a chart point of length {n}, got shape {x.shape}")
    return x


class Metric:
    """Common interface; subclasses override :meth:`evaluate` and, when they
    can, :meth:`y_derivatives`."""

    n: int = 2
    x_dependent: bool = True

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        return self.evaluate(x, y)

    # -- y-derivatives ----------------------------------------------------

    def y_derivatives(self, x, y, order: int) -> np.ndarray:
        """Tensor of y-partials of F of the requested order (1..3)."""
        return self.fd_y_derivatives(x, y, order)

    def fd_y_derivatives(self, x, y, order: int) -> np.ndarray:
        """Finite-difference path, available for every variant."""
        x = _check_x(x, self.n)
        y = _check_y(y, self.n)
        fn = lambda yy: self.evaluate(x, yy)
        if order == 1:
            return _fd.gradient(fn, y)
        if order == 2:
            return _fd.hessian(fn, y)
        if order == 3:
            return _fd.third(fn, y)
        raise DomainError(f"derivative order must be 1..3, got {order}")

    # -- energy and fundamental tensor ------------------------------------

    def energy(self, x, y) -> float:
        return 0.5 * self.evaluate(x, y) ** 2

    def energy_gradient_y(self, x, y) -> np.ndarray:
        return self.evaluate(x, y) * self.y_derivatives(x, y, 1)

    def fundamental_tensor(self, x, y) -> FundamentalTensor:
        f = self.evaluate(x, y)
        grad = self.y_derivatives(x, y, 1)
        hess = self.y_derivatives(x, y, 2)
        g = f * hess + np.outer(grad, grad)
        return FundamentalTensor(g=g, E=0.5 * f * f)

    def energy_x(self, x, y) -> np.ndarray:
        if not self.x_dependent:
            return np.zeros(self.n)
        x = _check_x(x, self.n)
        return _fd.x_partials(lambda xx: self.energy(xx, y), x)

    def energy_xy(self, x, y) -> np.ndarray:
        """Mixed partials E_{x^l y^j}, shape (n, n), index order (l, j)."""
        if not self.x_dependent:
            return np.zeros((self.n, self.n))
        x = _check_x(x, self.n)
        return _fd.x_partials(lambda xx: self.energy_gradient_y(xx, y), x)

    # -- convexity ---------------------------------------------------------

    def convexity_scan(self, x, directions: int | np.ndarray = 64,
                       tol: float = SPD_TOL) -> ConvexityReport:
        """Minimum fundamental-tensor eigenvalue over a set of directions."""
        if isinstance(directions, (int, np.integer)):
            if self.n == 2:
                th = (np.arange(directions) + 0.5) * 2.0 * np.pi / directions
                dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
            else:
                rng = np.random.default_rng(0)
                dirs = rng.normal(size=(directions, self.n))
                dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        else:
            dirs = np.asarray(directions, dtype=float)
        worst = np.inf
        worst_dir = dirs[0]
        for d in dirs:
            lam = self.fundamental_tensor(x, d).min_eigenvalue()
            if lam < worst:
                worst, worst_dir = lam, d
        return ConvexityReport(strictly_convex=bool(worst > tol),
                               min_eigenvalue=float(worst),
                               worst_direction=np.array(worst_dir))


class RiemannianMetric(Metric):
    """F = sqrt(a_ij(x) y^i y^j); ``a`` is an SPD matrix or a callable field."""

    def __init__(self, a: np.ndarray | Callable[[np.ndarray], np.ndarray],
                 n: int | None = None):
        if callable(a):
            self._field = a
            self._const = None
            if n is None:
                raise InvalidMetricError("n is required for a field-valued metric")
            self.n = n
            self.x_dependent = True
        else:
            a = np.asarray(a, dtype=float)
            if not is_spd(a):
                raise InvalidMetricError("a must be symmetric positive definite")
            self._field = None
            self._const = 0.5 * (a + a.T)
            self.n = a.shape[0]
            self.x_dependent = False

    def matrix_at(self, x) -> np.ndarray:
        if self._const is not None:
            return self._const
        a = np.asarray(self._field(np.asarray(x, dtype=float)), dtype=float)
        if not is_spd(a):
            raise InvalidMetricError(f"a(x) is not SPD at x={np.asarray(x)}")
        return 0.5 * (a + a.T)

    def evaluate(self, x, y) -> float:
        y = _check_y(y, self.n)
        a = self.matrix_at(x)
        return float(np.sqrt(y @ a @ y))

    def y_derivatives(self, x, y, order: int) -> np.ndarray:
        y = _check_y(y, self.n)
        a = self.matrix_at(x)
        ay = a @ y
        f = np.sqrt(y @ ay)
        if order == 1:
            return ay / f
        if order == 2:
            return a / f - np.outer(ay, ay) / f ** 3
        if order == 3:
            t = -(np.einsum("ij,k->ijk", a, ay)
                  + np.einsum("ik,j->ijk", a, ay)
                  + np.einsum("jk,i->ijk", a, ay)) / f ** 3
            t += 3.0 * np.einsum("i,j,k->ijk", ay, ay, ay) / f ** 5
            return t
        raise DomainError(f"derivative order must be 1..3, got {order}")


class RandersMetric(Metric):
    """F = alpha + beta with alpha Riemannian and beta a one-form.

    Admissibility (a^{ij} b_i b_j < 1) is enforced at every chart point the
    metric is evaluated at; it guarantees positivity and strict convexity.
    """

    def __init__(self, a, b, n: int | None = None):
        self.alpha = a if isinstance(a, RiemannianMetric) else RiemannianMetric(a, n=n)
        self.n = self.alpha.n
        if callable(b):
            self._b_field = b
            self._b_const = None
        else:
            b = np.asarray(b, dtype=float)
            if b.shape != (self.n,):
                raise InvalidMetricError("b must match the dimension of a")
            self._b_field = None
            self._b_const = b
        self.x_dependent = self.alpha.x_dependent or self._b_field is not None
        if not self.x_dependent:
            self._check_admissible(self.alpha.matrix_at(None), self._b_const)

    @staticmethod
    def _check_admissible(a: np.ndarray, b: np.ndarray) -> None:
        norm2 = float(b @ np.linalg.solve(a, b))
        if norm2 >= 1.0:
            raise InvalidMetricError(
                f"one-form norm {np.sqrt(norm2):.6g} >= 1, metric is not positive")

    def b_at(self, x) -> np.ndarray:
        if self._b_const is not None:
            return self._b_const
        return np.asarray(self._b_field(np.asarray(x, dtype=float)), dtype=float)

    def data_at(self, x):
        a = self.alpha.matrix_at(x)
        b = self.b_at(x)
        if self.x_dependent:
            self._check_admissible(a, b)
        return a, b

    def navigation_invariant(self, x=None) -> float:
        """a^{ij} b_i b_j at the chart point."""
        a, b = self.data_at(x if x is not None else np.zeros(self.n))
        return float(b @ np.linalg.solve(a, b))

    def evaluate(self, x, y) -> float:
        y = _check_y(y, self.n)
        a, b = self.data_at(x)
        return float(np.sqrt(y @ a @ y) + b @ y)

    def y_derivatives(self, x, y, order: int) -> np.ndarray:
        d = self.alpha.y_derivatives(x, y, order)
        if order == 1:
            return d + self.b_at(x)
        return d


class FiberProfileMetric(Metric):
    """Two-dimensional metric F = r f(theta) for a periodic profile.

    ``profile`` is an object with signature ``profile(theta, deriv=0)``
    (see :mod:`finsler2d.fiber`), or a callable ``x -> profile`` for a field.
    """

    n = 2

    def __init__(self, profile, x_field: bool | None = None):
        if x_field is None:
            # both a profile and an x-field are callable; sniff by return value
            x_field = not _looks_like_profile(profile)
        self._field = profile if x_field else None
        self._const = None if x_field else profile
        self.x_dependent = x_field

    def profile_at(self, x):
        if self._const is not None:
            return self._const
        return self._field(np.asarray(x, dtype=float))

    def _polar(self, y):
        y = _check_y(y, 2)
        r = float(np.hypot(y[0], y[1]))
        theta = float(np.arctan2(y[1], y[0]))
        return r, theta

    def evaluate(self, x, y) -> float:
        r, theta = self._polar(y)
        return r * float(self.profile_at(x)(theta))

    def y_derivatives(self, x, y, order: int) -> np.ndarray:
        r, theta = self._polar(y)
        p = self.profile_at(x)
        c, s = np.cos(theta), np.sin(theta)
        f = float(p(theta))
        ft = float(p(theta, 1))
        if order == 1:
            return np.array([c * f - s * ft, s * f + c * ft])
        ftt = float(p(theta, 2))
        u = np.array([s, -c])
        h = f + ftt
        if order == 2:
            return (h / r) * np.outer(u, u)
        if order == 3:
            fttt = float(p(theta, 3))
            ht = ft + fttt
            v = np.array([c, s])
            uuu = np.einsum("i,j,k->ijk", u, u, u)
            mixed = (np.einsum("i,j,k->ijk", v, u, u)
                     + np.einsum("i,j,k->ijk", u, v, u)
                     + np.einsum("i,j,k->ijk", u, u, v))
            return -(ht * uuu + h * mixed) / r ** 2
        raise DomainError(f"derivative order must be 1..3, got {order}")


def _looks_like_profile(obj) -> bool:
    try:
        val = obj(0.1)
    except Exception:
        return False
    return isinstance(val, (int, float, np.floating, np.integer))


class BlackBoxMetric(Metric):
    """Metric given only as a callable F(x, y); derivatives via finite
    differences. Positive 1-homogeneity is validated on construction with 32
    sampled (lambda, y) pairs."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], float], n: int = 2,
                 x_dependent: bool = True, check_homogeneity: bool = True,
                 check_at: np.ndarray | None = None):
        self._fn = fn
        self.n = n
        self.x_dependent = x_dependent
        if check_homogeneity:
            self._sampled_homogeneity_check(
                np.zeros(n) if check_at is None else np.asarray(check_at, float))

    def _sampled_homogeneity_check(self, x: np.ndarray) -> None:
        rng = np.random.default_rng(0)
        for _ in range(HOMOGENEITY_SAMPLES):
            y = rng.normal(size=self.n)
            y /= np.linalg.norm(y)
            lam = float(rng.uniform(0.1, 10.0))
            f1 = self._fn(x, y)
            f2 = self._fn(x, lam * y)
            if not np.isfinite(f1) or f1 <= 0.0:
                raise InvalidMetricError(
                    f"black-box metric is not positive at y={y}")
            if abs(f2 - lam * f1) > 1e-8 * (1.0 + abs(lam * f1)):
                raise InvalidMetricError(
                    "black-box metric failed the sampled homogeneity check: "
                    f"F(lam y) = {f2:.12g} vs lam F(y) = {lam * f1:.12g}")

    def evaluate(self, x, y) -> float:
        y = _check_y(y, self.n)
        val = float(self._fn(np.asarray(x, dtype=float), y))
        if not np.isfinite(val) or val <= 0.0:
            raise InvalidMetricError(f"black-box metric returned {val} at y={y}")
        return val


class SymmetrizedMetric(Metric):
    """F_s(x, y) = (F(x, y) + F(x, -y)) / 2 (absolute homogenization)."""

    def __init__(self, base: Metric):
        self.base = base
        self.n = base.n
        self.x_dependent = base.x_dependent

    def evaluate(self, x, y) -> float:
        y = _check_y(y, self.n)
        return 0.5 * (self.base.evaluate(x, y) + self.base.evaluate(x, -y))

    def y_derivatives(self, x, y, order: int) -> np.ndarray:
        sign = -1.0 if order % 2 else 1.0
        return 0.5 * (self.base.y_derivatives(x, y, order)
                      + sign * self.base.y_derivatives(x, -np.asarray(y, float), order))


def symmetrize(metric: Metric) -> SymmetrizedMetric:
    return SymmetrizedMetric(metric)


class LinearPullbackMetric(Metric):
    """F_L(x, y) = F(x, L y) for a fixed invertible fiber map L.

    If F solves the joint linear PDE system for transformed difference data,
    the pullback solves it for the original data; this is the bridge between
    torsion-normalized fiber coordinates and the original ones.
    """

    def __init__(self, base: Metric, L: np.ndarray):
        L = np.asarray(L, dtype=float)
        if L.shape != (base.n, base.n) or abs(np.linalg.det(L)) < 1e-12:
            raise InvalidMetricError("L must be an invertible n x n matrix")
        self.base = base
        self.L = L
        self.n = base.n
        self.x_dependent = base.x_dependent

    def evaluate(self, x, y) -> float:
        y = _check_y(y, self.n)
        return self.base.evaluate(x, self.L @ y)

    def y_derivatives(self, x, y, order: int) -> np.ndarray:
        y = _check_y(y, self.n)
        d = self.base.y_derivatives(x, self.L @ y, order)
        if order == 1:
            return self.L.T @ d
        if order == 2:
            return self.L.T @ d @ self.L
        return np.einsum("abc,ai,bj,ck->ijk", d, self.L, self.L, self.L)


def pullback(metric: Metric, L: np.ndarray) -> LinearPullbackMetric:
    return LinearPullbackMetric(metric, L)


# -- serialization ---------------------------------------------------------

def metric_to_json(metric: Metric) -> dict:
    """JSON-ready dict for the constant-coefficient variants."""
    if isinstance(metric, RandersMetric):
        if metric.x_dependent:
            raise InvalidMetricError("field-valued metrics are code-only")
        return {"type": "randers",
                "a": metric.alpha.matrix_at(None).tolist(),
                "b": metric.b_at(None).tolist()}
    if isinstance(metric, RiemannianMetric):
        if metric.x_dependent:
            raise InvalidMetricError("field-valued metrics are code-only")
        return {"type": "riemannian", "a": metric.matrix_at(None).tolist()}
    if isinstance(metric, FiberProfileMetric):
        if metric.x_dependent:
            raise InvalidMetricError("field-valued metrics are code-only")
        prof = metric.profile_at(None)
        if not hasattr(prof, "fourier_coefficients"):
            prof = prof.to_fourier()
        a0, ac, bs = prof.fourier_coefficients()
        return {"type": "fiber_profile", "a0": a0,
                "cos": list(map(float, ac)), "sin": list(map(float, bs))}
    raise InvalidMetricError(f"cannot serialize metric of type {type(metric).__name__}")


def metric_from_json(data: dict) -> Metric:
    kind = data.get("type")
    if kind == "riemannian":
        return RiemannianMetric(np.asarray(data["a"], dtype=float))
    if kind == "randers":
        return RandersMetric(np.asarray(data["a"], dtype=float),
                             np.asarray(data["b"], dtype=float))
    if kind == "fiber_profile":
        from .fiber import FourierProfile
        prof = FourierProfile(a0=float(data.get("a0", 0.0)),
                              cos_coeffs=np.asarray(data.get("cos", []), dtype=float),
                              sin_coeffs=np.asarray(data.get("sin", []), dtype=float))
        return FiberProfileMetric(prof)
    raise InvalidMetricError(f"unknown metric type tag {kind!r}")
