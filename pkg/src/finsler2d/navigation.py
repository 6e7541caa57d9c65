"""Randers metrics, wind data, and linear equivalence of shifted ellipsoids.

A Randers metric F = sqrt(a(y, y)) + b(y) with a^{ij} b_i b_j < 1 is the
travel-time norm of a Riemannian sea h under a wind W with h(W, W) < 1, and
the two descriptions convert in closed form both ways. The quantity

    h(W, W) = a^{ij} b_i b_j

is invariant under the conversion, and two fibers of a Randers metric are
linearly equivalent iff this number agrees, which is what the compatibility
checks below sample. The fiber indicatrix is the unit h-sphere shifted by W,
so linear equivalence of shifted ellipsoids does the geometric work; an
explicit equivalence map is constructed whenever the invariant matches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd
from .errors import DomainError, InvalidMetricError
from .metrics import RandersMetric, is_spd, spd_sqrt

INVARIANT_TOL = 1e-9
BOUNDARY_TOL = 1e-8


# ---------------------------------------------------------------------------
# one-form checks

@dataclass
class ClosednessReport:
    curl: float
    closed: bool


def randers_closed_check(metric: RandersMetric, x=(0.0, 0.0),
                         tol: float = 1e-7) -> ClosednessReport:
    """d(beta) at a point via finite differences: curl = d1 b2 - d2 b1."""
    x = np.asarray(x, dtype=float)
    jac = _fd.x_partials(lambda xx: metric.b_at(xx), x)   # (l, i) = d_l b_i
    curl = float(jac[0, 1] - jac[1, 0])
    return ClosednessReport(curl=curl, closed=bool(abs(curl) <= tol))


def randers_invariant(metric: RandersMetric, x=None) -> float:
    """a^{ij} b_i b_j at a point (constant fields ignore x)."""
    return metric.navigation_invariant(x)


@dataclass
class InvariantSpreadReport:
    invariants: np.ndarray
    spread: float
    passes: bool


def randers_gb_check(metric: RandersMetric, points,
                     tol: float = BOUNDARY_TOL) -> InvariantSpreadReport:
    """Sample the navigation invariant across base points; a compatible
    torsion-carrying connection exists iff the fibers are linearly equivalent,
    i.e. iff the invariant is constant."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inv = np.array([metric.navigation_invariant(p) for p in pts])
    spread = float(inv.max() - inv.min())
    return InvariantSpreadReport(invariants=inv, spread=spread,
                                 passes=bool(spread <= tol * (1.0 + inv.max())))


# ---------------------------------------------------------------------------
# wind data

@dataclass
class NavigationData:
    """Riemannian sea h and wind W, h(W, W) < 1."""

    h: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        if self.h.shape != (2, 2) or self.W.shape != (2,):
            raise DomainError("expected a 2x2 matrix and a 2-vector")
        if not is_spd(self.h):
            raise InvalidMetricError("sea metric must be positive definite")
        if self.wind_norm2 >= 1.0:
            raise InvalidMetricError(
                f"wind must be subcritical: h(W, W) = {self.wind_norm2:.6g}")

    @property
    def wind_norm2(self) -> float:
        return float(self.W @ self.h @ self.W)

    def to_json(self) -> dict:
        return {"h": self.h.tolist(), "W": self.W.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "NavigationData":
        return cls(np.asarray(data["h"], dtype=float),
                   np.asarray(data["W"], dtype=float))


def metric_from_navigation(nav: NavigationData) -> RandersMetric:
    """Travel-time norm of the wind problem, in closed form:

    lam = 1 - h(W, W), a = (lam h + (hW)(hW)^T) / lam^2, b = -hW / lam.
    """
    lam = 1.0 - nav.wind_norm2
    wb = nav.h @ nav.W
    a = (lam * nav.h + np.outer(wb, wb)) / lam ** 2
    b = -wb / lam
    return RandersMetric(a, b)


def randers_to_navigation(metric: RandersMetric, x=None) -> NavigationData:
    """Inverse conversion: lam = 1 - a^{ij} b_i b_j, h = lam (a - b b^T),
    W = -lam h^{-1} b."""
    a, b = metric.data_at(x)
    lam = 1.0 - float(b @ np.linalg.solve(a, b))
    if lam <= 0.0:
        raise InvalidMetricError("one-form is not admissible")
    h = lam * (a - np.outer(b, b))
    w = -lam * np.linalg.solve(h, b)
    return NavigationData(h, w)


def navigation_from_indicatrix(metric, x=(0.0, 0.0), n_samples: int = 64
                               ) -> NavigationData:
    """Recover (h, W) from the unit level set of any Randers-type norm.

    The indicatrix is sampled by homogeneity (r(theta) = 1/F(n(theta))) and a
    conic z^T M z + l . z + q = 0 is fitted through the samples as the SVD
    null vector; the shifted-sphere structure then gives W = -M^{-1} l / 2 and
    h = M / (W^T M W - q).
    """
    x = np.asarray(x, dtype=float)
    th = (np.arange(n_samples) + 0.5) * 2.0 * np.pi / n_samples
    ns = np.stack([np.cos(th), np.sin(th)], axis=1)
    rs = np.empty(n_samples)
    for i in range(n_samples):
        f = metric(x, ns[i])
        if f <= 0.0:
            raise InvalidMetricError("norm must be positive on the sample fan")
        rs[i] = 1.0 / f
    z = rs[:, None] * ns
    cols = np.column_stack([z[:, 0] ** 2, z[:, 0] * z[:, 1], z[:, 1] ** 2,
                            z[:, 0], z[:, 1], np.ones(n_samples)])
    _, sv, vt = np.linalg.svd(cols, full_matrices=False)
    coef = vt[-1]
    aa, bb, cc, dd, ee, qq = coef
    m = np.array([[aa, 0.5 * bb], [0.5 * bb, cc]])
    if np.linalg.det(m) <= 0.0:
        raise InvalidMetricError("fitted level set is not an ellipse")
    if np.trace(m) < 0.0:           # fix overall sign of the null vector
        m, dd, ee, qq = -m, -dd, -ee, -qq
    w = -0.5 * np.linalg.solve(m, np.array([dd, ee]))
    scale = float(w @ m @ w - qq)
    if scale <= 0.0:
        raise InvalidMetricError("origin is not enclosed by the level set")
    return NavigationData(m / scale, w)


# ---------------------------------------------------------------------------
# shifted ellipsoids

@dataclass
class ShiftedEllipsoid:
    """S = {y + v : Q y . y = 1}; the origin is inside iff Q v . v < 1."""

    Q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if not is_spd(self.Q):
            raise DomainError("Q must be positive definite")

    @property
    def invariant(self) -> float:
        return float(self.v @ self.Q @ self.v)

    def boundary_points(self, n: int = 64) -> np.ndarray:
        th = (np.arange(n) + 0.5) * 2.0 * np.pi / n
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        return self.v + u @ np.linalg.inv(spd_sqrt(self.Q))

    def residual(self, z: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(z) - self.v
        return np.einsum("ki,ij,kj->k", d, self.Q, d) - 1.0


@dataclass
class EllipsoidEquivalence:
    equivalent: bool
    invariants: tuple
    L: np.ndarray | None = None
    max_boundary_error: float = np.inf


def _rotation_to(u: np.ndarray) -> np.ndarray:
    """Rotation taking e1 to the unit vector along u."""
    n = np.linalg.norm(u)
    c, s = u[0] / n, u[1] / n
    return np.array([[c, -s], [s, c]])


def ellipsoid_equivalence(e1: ShiftedEllipsoid, e2: ShiftedEllipsoid,
                          tol: float = INVARIANT_TOL,
                          boundary_tol: float = BOUNDARY_TOL
                          ) -> EllipsoidEquivalence:
    """Decide linear equivalence L(S1) = S2 and construct L when it exists.

    Equivalence holds iff Q1 v1 . v1 = Q2 v2 . v2. The map is
    L = Q2^{-1/2} R Q1^{1/2} with R the rotation aligning Q1^{1/2} v1 with
    Q2^{1/2} v2; it is verified on a fan of boundary points.
    """
    i1, i2 = e1.invariant, e2.invariant
    if abs(i1 - i2) > tol * max(1.0, i1, i2):
        return EllipsoidEquivalence(equivalent=False, invariants=(i1, i2))
    s1 = spd_sqrt(e1.Q)
    s2 = spd_sqrt(e2.Q)
    u1 = s1 @ e1.v
    u2 = s2 @ e2.v
    if np.linalg.norm(u1) < 1e-14 or np.linalg.norm(u2) < 1e-14:
        rot = np.eye(2)
    else:
        rot = _rotation_to(u2) @ _rotation_to(u1).T
    L = np.linalg.inv(s2) @ rot @ s1
    mapped = e1.boundary_points(64) @ L.T
    err = float(np.abs(e2.residual(mapped)).max())
    return EllipsoidEquivalence(equivalent=bool(err <= boundary_tol),
                                invariants=(i1, i2), L=L,
                                max_boundary_error=err)


# ---------------------------------------------------------------------------
# monochromaticity

@dataclass
class MonochromaticityReport:
    invariants: np.ndarray
    spread: float
    passes: bool
    maps: list


def monochromatic_check_randers(metric: RandersMetric, points,
                                tol: float = BOUNDARY_TOL
                                ) -> MonochromaticityReport:
    """All fibers linearly equivalent to the fiber at the first point?

    Constructs the wind ellipsoid at every sample point and an explicit
    equivalence to the base fiber; passes iff the invariant spread is small
    and every construction verifies on its boundary fan.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    navs = [randers_to_navigation(metric, p) for p in pts]
    ells = [ShiftedEllipsoid(nav.h, nav.W) for nav in navs]
    inv = np.array([e.invariant for e in ells])
    spread = float(inv.max() - inv.min())
    maps = []
    ok = spread <= tol * (1.0 + inv.max())
    for e in ells[1:]:
        eq = ellipsoid_equivalence(ells[0], e, tol=max(tol, spread * 2.0 + 1e-15))
        maps.append(eq.L)
        ok = ok and eq.equivalent
    return MonochromaticityReport(invariants=inv, spread=spread,
                                  passes=bool(ok), maps=maps)
