"""Linear families, alpha-power-law families and their extensions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import DegenerateDenominator, DimensionMismatch, InadmissibleTheta, Infeasible
from .measures import ProbMeasure, as_weights, log_power

MEMBERSHIP_TOL = 1e-9
RANK_TOL = 1e-10


def _as_matrix(F, n: Optional[int] = None) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.size == 0:
        return np.zeros((0, n if n is not None else 0))
    if F.ndim == 1:
        F = F[None, :]
    if not np.all(np.isfinite(F)):
        raise ValueError("constraint functions must be finite")
    if n is not None and F.shape[1] != n:
        raise DimensionMismatch(f"constraints have {F.shape[1]} columns, alphabet has {n}")
    return F


def independent_rows(F: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Indices of a maximal independent subset of rows of ``F``.

    Pivoted QR of ``F.T``; a pivot is kept while ``|R_jj| > tol * max(1, |R_00|)``.
    Returned indices are sorted so the original row order is preserved.
    """
    if F.shape[0] == 0:
        return np.zeros(0, dtype=int)
    _, r, piv = scipy.linalg.qr(F.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    if d.size == 0:
        return np.zeros(0, dtype=int)
    keep = d > tol * max(1.0, d[0])
    return np.sort(piv[: int(keep.sum())])


class LinearFamily:
    """``{P : sum_x P(x) f_i(x) = 0, i = 1..k}`` with ``F`` holding ``f_i`` as rows.

    Linearly dependent rows are dropped at construction; ``rows`` records
    which of the supplied rows were kept.
    """

    def __init__(self, F, n: Optional[int] = None, tol: float = MEMBERSHIP_TOL):
        F = _as_matrix(F, n)
        if n is None:
            n = F.shape[1]
        if n < 2:
            raise ValueError("alphabet must have at least two symbols")
        self.rows = independent_rows(F)
        self.F = F[self.rows].copy()
        self.F.setflags(write=False)
        self.n = n
        self.tol = tol
        self._support = None

    @classmethod
    def from_affine(cls, G, rhs, tol: float = MEMBERSHIP_TOL) -> "LinearFamily":
        """Family ``{P : sum P g_i = c_i}``, folded into ``f_i = g_i - c_i``."""
        G = _as_matrix(G)
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        return cls(G - rhs[:, None], G.shape[1], tol)

    @property
    def k(self) -> int:
        return self.F.shape[0]

    def residual(self, P) -> np.ndarray:
        p = as_weights(P)
        if p.size != self.n:
            raise DimensionMismatch(f"measure of size {p.size} for family on {self.n} symbols")
        return self.F @ p

    def contains(self, P) -> bool:
        r = self.residual(P)
        return bool(r.size == 0 or np.max(np.abs(r)) <= self.tol)

    def support(self):
        """``(mask, interior_point)`` for ``Supp(L)``; raises :class:`Infeasible`.

        One LP over the cone ``{P >= 0, F P = 0}``: maximize ``sum y`` with
        ``0 <= y <= min(P, 1)``.  Every symbol in ``Supp(L)`` reaches ``y = 1``
        because the cone is closed under scaling and addition.
        """
        if self._support is None:
            self._support = _linear_support(self.F, self.n)
        return self._support

    def __repr__(self):
        return f"LinearFamily(k={self.k}, n={self.n})"


def _linear_support(F: np.ndarray, n: int):
    k = F.shape[0]
    if k == 0:
        return np.ones(n, dtype=bool), np.full(n, 1.0 / n)
    # variables [P (n), y (n)]
    c = np.concatenate([np.zeros(n), -np.ones(n)])
    A_eq = np.hstack([F, np.zeros((k, n))])
    A_ub = np.hstack([-np.eye(n), np.eye(n)])
    bounds = [(0, None)] * n + [(0, 1)] * n
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=np.zeros(k),
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise Infeasible(f"support LP failed: {res.message}")
    y = res.x[n:]
    if y.max() < 0.5:
        raise Infeasible("linear family is empty")
    mask = y > 0.5
    p = np.where(mask, np.maximum(res.x[:n], 0.0), 0.0)
    p = p / p.sum()
    # polish onto the affine hull restricted to the support
    A = np.vstack([F[:, mask], np.ones(mask.sum())])
    b = np.concatenate([np.zeros(k), [1.0]])
    ps = p[mask]
    ps = ps - np.linalg.lstsq(A, A @ ps - b, rcond=None)[0]
    if np.all(ps > 0):
        p[mask] = ps
    return mask, p


def linear_membership(L: LinearFamily, P) -> bool:
    """True iff ``max_i |sum_x P(x) f_i(x)| <= L.tol``."""
    return L.contains(P)


@dataclass(frozen=True)
class PowerLawFamily:
    """The alpha-power-law family generated by ``R`` and the rows of ``F``.

    Members satisfy ``P(x)**(alpha-1) = Z**(1-alpha) [R(x)**(alpha-1) + (1-alpha) theta.f(x)]``.
    ``alpha == 1`` is accepted and means the exponential family
    ``P ∝ R exp(-theta.f)``.
    """

    alpha: float
    R: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        r = as_weights(self.R).astype(float).copy()
        ProbMeasure(r)
        F = _as_matrix(self.F, r.size).copy()
        if self.alpha > 1 and np.any(r <= 0):
            raise ValueError("alpha > 1 requires a reference measure with full support")
        r.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "F", F)

    @property
    def k(self) -> int:
        return self.F.shape[0]

    @property
    def n(self) -> int:
        return self.R.size

    def r_power(self) -> np.ndarray:
        """``R(x)**(alpha-1)`` (``inf`` where ``R = 0`` and ``alpha < 1``)."""
        with np.errstate(over="ignore"):
            return np.exp(log_power(self.R, self.alpha - 1.0))

    def base(self, theta) -> np.ndarray:
        """``R**(alpha-1) + (1-alpha) theta.f``; for ``alpha == 1`` the exponent ``-theta.f``."""
        theta = self._theta(theta)
        if self.alpha == 1:
            return -(theta @ self.F)
        return self.r_power() + (1.0 - self.alpha) * (theta @ self.F)

    def _theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.k,):
            raise DimensionMismatch(f"theta has shape {theta.shape}, family has k={self.k}")
        return theta

    def admissible(self, theta) -> bool:
        if self.alpha == 1:
            return bool(np.all(np.isfinite(self.base(theta))))
        b = self.base(theta)
        return bool(np.all(b[self.R > 0] > 0))

    def log_unnormalized(self, theta, clip: bool = False) -> np.ndarray:
        """``log`` of the unnormalized member weights (``-inf`` off the support)."""
        b = self.base(theta)
        if self.alpha == 1:
            with np.errstate(divide="ignore"):
                return np.log(self.R) + b
        if clip:
            b = np.maximum(b, 0.0)
        elif np.any(b[self.R > 0] <= 0):
            raise InadmissibleTheta("positivity condition fails for theta=%r" % (list(np.atleast_1d(theta)),))
        out = log_power(np.where(np.isinf(b), 0.0, b), 1.0 / (self.alpha - 1.0))
        # alpha < 1 with R(x) = 0: the bracket is infinite and the weight is 0
        return np.where(np.isinf(b), -np.inf, out)

    def member_and_Z(self, theta, clip: bool = False):
        lu = self.log_unnormalized(theta, clip=clip)
        m = lu.max()
        if not np.isfinite(m):
            raise InadmissibleTheta("member has empty support")
        u = np.exp(lu - m)
        s = u.sum()
        with np.errstate(over="ignore"):
            return u / s, float(np.exp(m) * s)

    def normalizer(self, theta, clip: bool = False) -> float:
        """``Z(theta)`` with ``P**(alpha-1) = Z**(1-alpha) * base``."""
        return self.member_and_Z(theta, clip)[1]

    def member(self, theta, clip: bool = False) -> ProbMeasure:
        return ProbMeasure(self.member_and_Z(theta, clip)[0])

    def linear_family(self) -> LinearFamily:
        """The linear family characterized by the same functions."""
        return LinearFamily(self.F, self.n)


def power_law_member(M: PowerLawFamily, theta) -> ProbMeasure:
    """Member ``P_theta``; raises :class:`InadmissibleTheta` off the parameter set."""
    return M.member(theta)


@dataclass(frozen=True)
class ExtendedPowerLawFamily:
    """Clipped extension of a power-law family anchored at ``theta_star``.

    ``theta_star`` are the dual parameters of the forward projection of ``R``
    on the associated linear family (``alpha > 1``).
    """

    base_family: PowerLawFamily
    theta_star: np.ndarray
    tol: float = MEMBERSHIP_TOL

    def __post_init__(self):
        if self.base_family.alpha <= 1:
            raise ValueError("the clipped extension is defined for alpha > 1")
        object.__setattr__(self, "theta_star", self.base_family._theta(self.theta_star).copy())

    def member(self, theta) -> ProbMeasure:
        return self.base_family.member(theta, clip=True)

    def anchor(self) -> ProbMeasure:
        return self.member(self.theta_star)


def extended_member_check(Mext: ExtendedPowerLawFamily, P, theta) -> bool:
    """Whether ``P`` is the clipped member at ``theta`` and obeys the support rules.

    Checks: (a) ``P`` equals the clipped power-law member at ``theta``;
    (b) the anchor's support is contained in ``Supp(P)``;
    (c) ``theta.f(x) <= theta_star.f(x)`` wherever ``P(x) = 0``.
    """
    M = Mext.base_family
    tol = Mext.tol
    p = as_weights(P)
    try:
        cand = M.member_and_Z(theta, clip=True)[0]
    except Exception:
        return False
    if np.max(np.abs(cand - p)) > tol:
        return False
    supp = cand > 0
    anchor = M.member_and_Z(Mext.theta_star, clip=True)[0]
    if np.any((anchor > 0) & ~supp):
        return False
    theta = M._theta(theta)
    lhs = theta @ M.F
    rhs = Mext.theta_star @ M.F
    off = ~supp
    return bool(np.all(lhs[off] <= rhs[off] + tol * max(1.0, np.abs(rhs).max(initial=0.0))))


def tilt_coefficients(M: PowerLawFamily, P_hat) -> np.ndarray:
    """``tau_i = sum P_hat f_i / sum P_hat R**(alpha-1)``."""
    ph = as_weights(P_hat)
    rp = M.r_power() if M.alpha != 1 else np.ones(M.n)
    m = ph > 0
    den = float(np.sum(ph[m] * rp[m]))
    if not (den > 0 and math.isfinite(den)):
        raise DegenerateDenominator("sum_x P_hat(x) R(x)^(alpha-1) must be positive and finite")
    return (M.F @ ph) / den


def orthogonal_linear_family(M: PowerLawFamily, P_hat) -> LinearFamily:
    """Linear family with tilted constraints ``f_i - tau_i R**(alpha-1)``.

    Built so that ``P_hat`` belongs to it; rows are not rank-reduced beyond
    what :class:`LinearFamily` does.
    """
    tau = tilt_coefficients(M, P_hat)
    rp = M.r_power() if M.alpha != 1 else np.ones(M.n)
    Ft = M.F - tau[:, None] * rp[None, :]
    return LinearFamily(Ft, M.n)


def _anchor_scale(M: PowerLawFamily, theta_star):
    ts = M._theta(theta_star)
    P_star, Z_star = M.member_and_Z(ts)
    scale = 1.0 if M.alpha == 1 else Z_star ** (M.alpha - 1.0)
    return ts, P_star, scale


def reparametrize(M: PowerLawFamily, theta_star) -> PowerLawFamily:
    """The same family re-anchored at the reference measure ``P_{theta_star}``.

    Use :func:`reparametrize_theta` to map parameters between the two.
    """
    _, P_star, _ = _anchor_scale(M, theta_star)
    return PowerLawFamily(M.alpha, P_star, M.F)


def reparametrize_theta(M: PowerLawFamily, theta_star, theta, inverse: bool = False) -> np.ndarray:
    """Parameter of ``P_theta`` in the family re-anchored at ``theta_star``.

    ``xi = (theta - theta_star) / Z(theta_star)**(alpha-1)``; with
    ``inverse=True`` maps ``xi`` back to ``theta``.
    """
    ts, _, scale = _anchor_scale(M, theta_star)
    if inverse:
        return M._theta(theta) * scale + ts
    return (M._theta(theta) - ts) / scale
