"""Linear connections, difference data and torsion normalization.

A connection is a coefficient array Gamma^i_jk (index order (i, j, k)),
constant or field-valued. Given a metric-preserving candidate ``gb`` and a
torsion-free projective candidate ``d``, the difference data splits their gap
into a symmetric part and a torsion part:

    Gamma^i_jk = (gb^i_jk + gb^i_kj)/2 - d^i_jk        (symmetric in j, k)
    T^i_jk     = gb^i_jk - gb^i_kj                     (antisymmetric in j, k)

In two dimensions the torsion is captured by the vector
tau = (T^1_12, T^2_12); a fiber-linear change y -> L y transforms it by
tau' = det(L)^{-1} L tau, which lets any nonzero tau be normalized to (1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, TorsionError

SYMMETRY_TOL = 1e-12


class Connection:
    """Gamma^i_jk as a constant array or a callable field x -> array."""

    def __init__(self, gamma: np.ndarray | Callable[[np.ndarray], np.ndarray],
                 n: int | None = None):
        if callable(gamma):
            if n is None:
                raise DomainError("n is required for a field-valued connection")
            self._field = gamma
            self._const = None
            self.n = n
        else:
            gamma = np.asarray(gamma, dtype=float)
            if gamma.ndim != 3 or len(set(gamma.shape)) != 1:
                raise DomainError("gamma must have shape (n, n, n)")
            self._field = None
            self._const = gamma
            self.n = gamma.shape[0]

    @property
    def x_dependent(self) -> bool:
        return self._field is not None

    def at(self, x) -> np.ndarray:
        if self._const is not None:
            return self._const
        g = np.asarray(self._field(np.asarray(x, dtype=float)), dtype=float)
        if g.shape != (self.n,) * 3:
            raise DomainError(f"field returned shape {g.shape}, expected {(self.n,)*3}")
        return g

    def torsion_at(self, x) -> np.ndarray:
        g = self.at(x)
        return g - g.transpose(0, 2, 1)

    def is_torsion_free(self, x=None, tol: float = SYMMETRY_TOL) -> bool:
        return bool(np.abs(self.torsion_at(x)).max() <= tol)

    def to_json(self) -> dict:
        if self.x_dependent:
            raise DomainError("field-valued connections are code-only")
        return {"n": self.n, "gamma": self._const.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Connection":
        gamma = np.asarray(data["gamma"], dtype=float)
        conn = cls(gamma)
        if "n" in data and int(data["n"]) != conn.n:
            raise DomainError("declared n does not match gamma shape")
        return conn


def _require_symmetric(t: np.ndarray, what: str) -> None:
    dev = np.abs(t - t.transpose(0, 2, 1)).max()
    if dev > SYMMETRY_TOL * max(1.0, np.abs(t).max()):
        raise TorsionError(f"{what} must be symmetric in the lower indices "
                           f"(deviation {dev:.3g})")


def _require_antisymmetric(t: np.ndarray, what: str) -> None:
    dev = np.abs(t + t.transpose(0, 2, 1)).max()
    if dev > SYMMETRY_TOL * max(1.0, np.abs(t).max()):
        raise TorsionError(f"{what} must be antisymmetric in the lower indices "
                           f"(deviation {dev:.3g})")


@dataclass
class ContractedDifference:
    """Contractions with a fixed fiber vector y."""

    gamma_y: np.ndarray    # Gamma^i_j  = Gamma^i_jk y^k
    gamma_yy: np.ndarray   # Gamma^i    = Gamma^i_jk y^j y^k
    torsion_y: np.ndarray  # T^i_j      = T^i_jk y^k


@dataclass
class DifferenceData:
    """Symmetric difference tensor plus torsion tensor at a point."""

    gamma: np.ndarray
    torsion: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.torsion = np.asarray(self.torsion, dtype=float)
        if self.gamma.shape != self.torsion.shape or self.gamma.ndim != 3:
            raise TorsionError("gamma and torsion must share shape (n, n, n)")
        _require_symmetric(self.gamma, "the difference tensor")
        _require_antisymmetric(self.torsion, "the torsion tensor")
        self.n = self.gamma.shape[0]

    @classmethod
    def from_connections(cls, gb: Connection, d: Connection, at=None,
                         tol: float = SYMMETRY_TOL) -> "DifferenceData":
        if gb.n != d.n:
            raise DomainError("connections live in different dimensions")
        at = np.zeros(gb.n) if at is None else np.asarray(at, dtype=float)
        dg = d.at(at)
        dt = dg - dg.transpose(0, 2, 1)
        if np.abs(dt).max() > tol * max(1.0, np.abs(dg).max()):
            bad = np.argwhere(np.abs(dt) > tol * max(1.0, np.abs(dg).max()))
            names = ", ".join(f"d^{i+1}_{j+1}{k+1}" for i, j, k in bad[:4])
            raise TorsionError(
                f"the projective candidate must be torsion-free; offending "
                f"components: {names}")
        gg = gb.at(at)
        sym = 0.5 * (gg + gg.transpose(0, 2, 1))
        return cls(gamma=sym - dg, torsion=gg - gg.transpose(0, 2, 1))

    def torsion_vector(self) -> np.ndarray:
        """tau = (T^1_12, T^2_12); two-dimensional data only."""
        if self.n != 2:
            raise DomainError("the torsion vector is a two-dimensional notion")
        return np.array([self.torsion[0, 0, 1], self.torsion[1, 0, 1]])

    def contract(self, y) -> ContractedDifference:
        y = np.asarray(y, dtype=float)
        return ContractedDifference(
            gamma_y=self.gamma @ y,
            gamma_yy=(self.gamma @ y) @ y,
            torsion_y=self.torsion @ y)

    def transform(self, L: np.ndarray) -> "DifferenceData":
        """Tensor transform under the fiber change y -> L y.

        X'^a_bc = L^a_i (L^{-1})^j_b (L^{-1})^k_c X^i_jk; symmetry types are
        preserved exactly.
        """
        L = np.asarray(L, dtype=float)
        li = np.linalg.inv(L)
        rule = lambda t: np.einsum("ai,ijk,jb,kc->abc", L, t, li, li)
        return DifferenceData(gamma=rule(self.gamma), torsion=rule(self.torsion))

    def to_json(self) -> dict:
        return {"n": self.n, "gamma": self.gamma.tolist(),
                "torsion": self.torsion.tolist()}


@dataclass
class TorsionNormalization:
    """Result of rotating/scaling the torsion vector onto (1, 0).

    ``berwald`` flags vanishing torsion (nothing to normalize). The gauge is
    fixed by rotating tau itself (not -tau) onto the positive first axis and
    then scaling the second fiber coordinate; the opposite sign choice would
    produce equally valid, mirrored data.
    """

    berwald: bool
    L: np.ndarray | None
    data: DifferenceData
    tau_input: np.ndarray


def normalize_torsion(dd: DifferenceData, tol: float = 1e-12) -> TorsionNormalization:
    tau = dd.torsion_vector()
    norm = float(np.linalg.norm(tau))
    if norm <= tol:
        return TorsionNormalization(berwald=True, L=None, data=dd, tau_input=tau)
    rot = np.array([[tau[0], tau[1]], [-tau[1], tau[0]]]) / norm
    L = np.diag([1.0, norm]) @ rot
    out = dd.transform(L)
    return TorsionNormalization(berwald=False, L=L, data=out, tau_input=tau)
