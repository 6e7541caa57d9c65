"""Sprays, geodesics, parallel transport, and the pointwise residuals.

The spray of a metric is computed from its energy: with E = F^2/2,

    2 G^i = g^{ij} (E_{x^l y^j} y^l - E_{x^j}).

Two affine-connection compatibility conditions are measured as residuals:

* Douglas type: 2G^i - D^i_jk(x) y^j y^k is a multiple of y (the projective
  factor rho is split off by Euclidean projection and returned);
* generalized Berwald type: E_{x^j} = E_{y^i} Gamma^i_jk y^k for a (possibly
  torsion-carrying) connection Gamma.

The linear first-order system that couples a candidate metric to difference
data (gamma, T) lives here in its tensor form; :mod:`finsler2d.fiber` holds
the equivalent single-fiber profile form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .connections import Connection, DifferenceData
from .errors import DomainError, NonConvexError
from .metrics import Metric, is_spd

IVP_RTOL = 1e-9
IVP_ATOL = 1e-9


def spray_coefficients(metric: Metric, x, y,
                       check_convexity: bool = True) -> np.ndarray:
    """G^i(x, y); raises :class:`NonConvexError` where g is not SPD.

    ``check_convexity=False`` skips the SPD guard; the geodesic integrator
    uses this together with a terminal convexity event so that trial steps
    slightly past the breakdown point do not abort the solve.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = metric.fundamental_tensor(x, y).g
    if check_convexity and not is_spd(g):
        raise NonConvexError(
            f"fundamental tensor is not positive definite at x={x}, y={y}")
    e_x = metric.energy_x(x, y)
    e_xy = metric.energy_xy(x, y)          # (l, j)
    rhs = e_xy.T @ y - e_x                 # rhs_j = E_{x^l y^j} y^l - E_{x^j}
    return 0.5 * np.linalg.solve(g, rhs)


def douglas_residual(metric: Metric, d: Connection, x, y
                     ) -> tuple[np.ndarray, float]:
    """(residual, rho) of 2G = D y y + rho y.

    rho is the Euclidean projection coefficient of 2G - Dyy onto y; the
    residual is the orthogonal remainder and vanishes iff 2G - Dyy is
    proportional to y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    two_g = 2.0 * spray_coefficients(metric, x, y)
    dyy = np.einsum("ijk,j,k->i", d.at(x), y, y)
    r = two_g - dyy
    yy = float(y @ y)
    if yy == 0.0:
        raise DomainError("y must be nonzero")
    rho = float(r @ y) / yy
    return r - rho * y, rho


def gb_residual(metric: Metric, gb: Connection, x, y) -> np.ndarray:
    """E_{x^j} - E_{y^i} Gamma^i_jk y^k, shape (n,)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    e_x = metric.energy_x(x, y)
    e_y = metric.energy_gradient_y(x, y)
    gam = gb.at(x)
    return e_x - np.einsum("i,ijk,k->j", e_y, gam, y)


def spray_from_connection(gb: Connection, metric: Metric, x, y) -> np.ndarray:
    """Spray induced by a compatible connection without x-differentiation:

    2 G^i = Gamma^i_kl y^k y^l + g^{ij} E_{y^m} (Gamma^m_lj - Gamma^m_jl) y^l.

    For a torsion-free connection the correction term vanishes. Agrees with
    :func:`spray_coefficients` whenever the gb residual vanishes identically.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gam = gb.at(x)
    quad = np.einsum("ikl,k,l->i", gam, y, y)
    g = metric.fundamental_tensor(x, y).g
    if not is_spd(g):
        raise NonConvexError(
            f"fundamental tensor is not positive definite at x={x}, y={y}")
    e_y = metric.energy_gradient_y(x, y)
    corr = np.einsum("m,mlj,l->j", e_y, gam, y) - np.einsum(
        "m,mjl,l->j", e_y, gam, y)
    return 0.5 * (quad + np.linalg.solve(g, corr))


# ---------------------------------------------------------------------------
# linear PDE residuals (tensor form)

def pde_residual(metric: Metric, dd: DifferenceData, x, y) -> np.ndarray:
    """First-order system: F_{y^k y^i} gamma^i - F_{y^i} T^i_k, shape (n,).

    gamma^i = gamma^i_jk y^j y^k, T^i_k = T^i_kj y^j. Solutions of this
    system are exactly the metrics compatible with both connections that
    produced the difference data.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    con = dd.contract(y)
    f_y = metric.y_derivatives(x, y, 1)
    f_yy = metric.y_derivatives(x, y, 2)
    return f_yy @ con.gamma_yy - f_y @ con.torsion_y


def pde_system_residual(metric: Metric, dd: DifferenceData, x, y) -> np.ndarray:
    """Companion antisymmetric system, shape (n, n):

    F_{y^k y^i} (2 gamma^i_s + T^i_s) - F_{y^s y^i} (2 gamma^i_k + T^i_k)
        - 2 F_{y^i} T^i_ks.

    Its y-contraction on the s slot reproduces twice :func:`pde_residual`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    con = dd.contract(y)
    f_y = metric.y_derivatives(x, y, 1)
    f_yy = metric.y_derivatives(x, y, 2)
    m = 2.0 * con.gamma_y + con.torsion_y        # (i, s)
    a = f_yy @ m                                 # (k, s)
    return a - a.T - 2.0 * np.einsum("i,iks->ks", f_y, dd.torsion)


# ---------------------------------------------------------------------------
# curves

class Segment:
    """Straight segment a -> b, t in [0, 1]."""

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.t_span = (0.0, 1.0)

    def point(self, t):
        return self.a + t * (self.b - self.a)

    def velocity(self, t):
        return self.b - self.a

    def to_json(self) -> dict:
        return {"type": "segment", "a": self.a.tolist(), "b": self.b.tolist()}


class Circle:
    """Counterclockwise circle, t in [0, 2 pi] by default."""

    def __init__(self, center=(0.0, 0.0), radius=1.0, t_span=(0.0, 2.0 * np.pi)):
        if radius <= 0.0:
            raise DomainError("radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.t_span = (float(t_span[0]), float(t_span[1]))

    def point(self, t):
        return self.center + self.radius * np.array([np.cos(t), np.sin(t)])

    def velocity(self, t):
        return self.radius * np.array([-np.sin(t), np.cos(t)])

    def to_json(self) -> dict:
        return {"type": "circle", "center": self.center.tolist(),
                "radius": self.radius, "t_span": list(self.t_span)}


class Polyline:
    """Piecewise-linear path through the given points, unit parameter per leg."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise DomainError("polyline needs at least two points")
        self.points = pts
        self.t_span = (0.0, float(pts.shape[0] - 1))

    def point(self, t):
        i = min(int(np.floor(t)), self.points.shape[0] - 2)
        s = t - i
        return self.points[i] + s * (self.points[i + 1] - self.points[i])

    def velocity(self, t):
        i = min(int(np.floor(t)), self.points.shape[0] - 2)
        return self.points[i + 1] - self.points[i]

    def segments(self):
        return [Segment(self.points[i], self.points[i + 1])
                for i in range(self.points.shape[0] - 1)]

    def to_json(self) -> dict:
        return {"type": "polyline", "points": self.points.tolist()}


def curve_from_json(data: dict):
    kind = data.get("type")
    if kind == "segment":
        return Segment(data["a"], data["b"])
    if kind == "circle":
        return Circle(data.get("center", (0.0, 0.0)), data.get("radius", 1.0),
                      data.get("t_span", (0.0, 2.0 * np.pi)))
    if kind == "polyline":
        return Polyline(data["points"])
    raise DomainError(f"unknown curve type {kind!r}")


# ---------------------------------------------------------------------------
# geodesics

@dataclass
class GeodesicResult:
    t: np.ndarray
    x: np.ndarray            # (N, n)
    y: np.ndarray            # (N, n)
    f_values: np.ndarray | None
    status: str = "ok"
    breakdown_t: float | None = None

    @property
    def f_drift(self) -> float:
        if self.f_values is None or self.f_values.size == 0:
            return 0.0
        return float(np.abs(self.f_values - self.f_values[0]).max())


def integrate_geodesic(source, x0, y0, t_span, n_samples: int = 129,
                       rtol: float = IVP_RTOL, atol: float = IVP_ATOL
                       ) -> GeodesicResult:
    """Integrate x'' = -2 G(x, x') from a metric or a connection.

    A metric source uses its spray; a connection source uses the quadratic
    geodesic equation of the connection. Strict convexity is monitored after
    the fact on the sample points for metric sources; on breakdown the result
    is truncated at the last convex sample and flagged.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    n = x0.size
    events = None
    if isinstance(source, Metric):
        spray_coefficients(source, x0, y0)     # initial point must be convex

        def accel(x, y):
            return -2.0 * spray_coefficients(source, x, y,
                                             check_convexity=False)

        def convexity_event(t, state):
            g = source.fundamental_tensor(state[:n], state[n:]).g
            w = np.linalg.eigvalsh(0.5 * (g + g.T))
            return float(w[0] - 1e-8 * max(1.0, w[-1]))

        convexity_event.terminal = True
        convexity_event.direction = -1.0
        events = convexity_event
    elif isinstance(source, Connection):
        def accel(x, y):
            return -np.einsum("ijk,j,k->i", source.at(x), y, y)
    else:
        raise DomainError("source must be a metric or a connection")

    def rhs(t, state):
        x, y = state[:n], state[n:]
        return np.concatenate([y, accel(x, y)])

    t_eval = np.linspace(t_span[0], t_span[1], n_samples)
    sol = solve_ivp(rhs, t_span, np.concatenate([x0, y0]), t_eval=t_eval,
                    rtol=rtol, atol=atol, dense_output=False, events=events)
    if not sol.success and sol.status != 1:
        raise DomainError(f"geodesic integration failed: {sol.message}")
    xs = sol.y[:n].T
    ys = sol.y[n:].T
    f_vals = None
    status = "ok"
    breakdown = None
    if sol.status == 1:                        # convexity event fired
        status = "convexity breakdown"
        breakdown = float(sol.t_events[0][0])
    if isinstance(source, Metric):
        f_vals = np.empty(sol.t.size)
        good = sol.t.size
        for i in range(sol.t.size):
            ft = source.fundamental_tensor(xs[i], ys[i])
            if not ft.is_spd():
                good = i
                status = "convexity breakdown"
                breakdown = float(sol.t[i])
                break
            f_vals[i] = source.evaluate(xs[i], ys[i])
        if good < sol.t.size:
            return GeodesicResult(t=sol.t[:good], x=xs[:good], y=ys[:good],
                                  f_values=f_vals[:good], status=status,
                                  breakdown_t=breakdown)
    return GeodesicResult(t=sol.t, x=xs, y=ys, f_values=f_vals, status=status,
                          breakdown_t=breakdown)


def _points_to_polyline(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point to the piecewise-linear path."""
    a = poly[:-1]                                  # (m, 2)
    d = poly[1:] - a
    len2 = np.maximum(np.einsum("mj,mj->m", d, d), 1e-300)
    diff = pts[:, None, :] - a[None, :, :]         # (n, m, 2)
    t = np.clip(np.einsum("nmj,mj->nm", diff, d) / len2, 0.0, 1.0)
    proj = diff - t[:, :, None] * d[None, :, :]
    return np.sqrt(np.einsum("nmj,nmj->nm", proj, proj).min(axis=1))


def path_hausdorff(path_a: np.ndarray, path_b: np.ndarray,
                   match_arclength: bool = True) -> float:
    """Symmetric Hausdorff distance between two sampled paths, measuring
    sample points against the other path's polyline (not its sample set, so
    a reparametrized copy of the same curve scores ~0).

    Projectively related geodesics traverse the same point set at different
    speeds, so by default the longer path is clipped to the Euclidean
    arclength of the shorter before comparing.
    """
    a = np.asarray(path_a, dtype=float)
    b = np.asarray(path_b, dtype=float)

    def arclen(p):
        return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0),
                                                               axis=1))])

    def clip(p, lens, cut):
        # cut at the exact arclength, interpolating inside the last segment
        if lens[-1] <= cut * (1.0 + 1e-12):
            return p
        i = int(np.searchsorted(lens, cut))
        frac = (cut - lens[i - 1]) / (lens[i] - lens[i - 1])
        end = p[i - 1] + frac * (p[i] - p[i - 1])
        return np.vstack([p[:i], end])

    if match_arclength:
        la, lb = arclen(a), arclen(b)
        cut = min(la[-1], lb[-1])
        a = clip(a, la, cut)
        b = clip(b, lb, cut)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise DomainError("paths need at least two samples")
    return float(max(_points_to_polyline(a, b).max(),
                     _points_to_polyline(b, a).max()))


# ---------------------------------------------------------------------------
# parallel transport

@dataclass
class TransportResult:
    t: np.ndarray
    X: np.ndarray                     # (N, n)
    f_values: np.ndarray | None = None
    f_drift: np.ndarray | None = field(default=None)

    @property
    def max_drift(self) -> float:
        if self.f_drift is None or self.f_drift.size == 0:
            return 0.0
        return float(np.abs(self.f_drift).max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "X1", "X2", "F", "drift"])
            for i in range(self.t.size):
                f = "" if self.f_values is None else repr(float(self.f_values[i]))
                d = "" if self.f_drift is None else repr(float(self.f_drift[i]))
                writer.writerow([repr(float(self.t[i])),
                                 repr(float(self.X[i, 0])),
                                 repr(float(self.X[i, 1])), f, d])


def parallel_transport(conn: Connection, curve, X0, metric: Metric | None = None,
                       n_samples: int = 257, rtol: float = IVP_RTOL,
                       atol: float = IVP_ATOL) -> TransportResult:
    """Solve X'^i = -Gamma^i_jk(c(t)) c'^j X^k along the curve.

    With a metric supplied, F(c(t), X(t)) is recorded; a compatible
    (generalized Berwald) connection keeps it constant, so the drift column
    is the direct certificate of norm preservation.
    """
    X0 = np.asarray(X0, dtype=float)
    if isinstance(curve, Polyline):
        # knots break smoothness; transport leg by leg and chain the frames
        ts, xs = [], []
        cur = X0
        offset = 0.0
        for seg in curve.segments():
            part = parallel_transport(conn, seg, cur, metric=None,
                                      n_samples=max(2, n_samples // max(
                                          1, len(curve.segments()))),
                                      rtol=rtol, atol=atol)
            ts.append(part.t + offset)
            xs.append(part.X)
            cur = part.X[-1]
            offset += seg.t_span[1]
        t = np.concatenate(ts)
        X = np.vstack(xs)
    else:
        def rhs(t, X):
            return -np.einsum("ijk,j,k->i", conn.at(curve.point(t)),
                              curve.velocity(t), X)
        t_eval = np.linspace(curve.t_span[0], curve.t_span[1], n_samples)
        sol = solve_ivp(rhs, curve.t_span, X0, t_eval=t_eval, rtol=rtol,
                        atol=atol)
        if not sol.success:
            raise DomainError(f"transport integration failed: {sol.message}")
        t = sol.t
        X = sol.y.T
    f_vals = None
    drift = None
    if metric is not None:
        pts = np.array([_curve_point(curve, ti) for ti in t])
        f_vals = np.array([metric.evaluate(pts[i], X[i])
                           for i in range(t.size)])
        drift = f_vals - f_vals[0]
    return TransportResult(t=t, X=X, f_values=f_vals, f_drift=drift)


def _curve_point(curve, t):
    return curve.point(t)
