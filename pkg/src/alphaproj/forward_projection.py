"""Forward projection ``argmin_{P in L} I_alpha(P, R)`` onto a linear family.

The minimizer is a (clipped, for ``alpha > 1``) power-law member, so the
primary solver works on the k-dimensional dual.  With
``b(x) = R(x)**(alpha-1) + (1-alpha) theta.f(x)`` the potential

    G(theta) = (1/alpha) sum_x [b(x)]_+ ** (alpha/(alpha-1))

is convex and ``grad G = -sum_x [b(x)]_+**(1/(alpha-1)) f(x)``, so its
stationary point is exactly the member lying in ``L``.  For ``alpha < 1``
the sum runs over ``Supp(L)`` and ``b > 0`` acts as a barrier; for
``alpha == 1`` it is ``sum R exp(-theta.f)``, the classical I-projection dual.
Newton steps with Armijo backtracking on ``log G`` are used throughout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from . import kernels
from .divergence import relative_alpha_entropy
from .errors import DegenerateDenominator, DimensionMismatch, NotInFamily
from .families import LinearFamily, independent_rows
from .measures import ProbMeasure, as_weights, log_power, total_variation

__all__ = [
    "SolverOptions",
    "Status",
    "ProjectionResult",
    "objective_gradient",
    "forward_project",
    "projected_gradient",
    "pythagorean_check",
    "kkt_certificate",
]

ARMIJO = 1e-4
MAX_HALVINGS = 30
# a symbol counts as clipped once its bracket is at or below this
CLIP_EPS = 0.0
ROUNDOFF_MASS = 1e-14


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SolverOptions:
    kkt_tol: float = 1e-8
    max_newton_iters: int = 200
    max_fallback_iters: int = 5000
    multistart_count: int = 1
    rng_seed: int = 0
    # "auto": Newton, projected gradient if Newton stalls; "newton"; "fallback"
    method: str = "auto"


@dataclass(frozen=True)
class ProjectionResult:
    """Forward projection ``Q`` of ``R`` on ``L`` with its dual certificate.

    ``theta_star`` is indexed by the rows of ``L.F``.  ``multipliers`` holds
    the independently fitted Lagrange multipliers (``lambda``, ``nu``,
    ``mu``) and the residual components.
    """

    Q: ProbMeasure
    theta_star: np.ndarray
    Z: float
    active_support: frozenset
    kkt_residual: float
    pythagorean_gap_bound: float
    status: Status
    L: LinearFamily
    R: ProbMeasure
    alpha: float
    divergence: float
    iterations: int = 0
    method: str = "newton"
    multistart_spread: float = 0.0
    multipliers: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


# ---------------------------------------------------------------------------
# objective


def objective_gradient(P, R, alpha: float) -> np.ndarray:
    """Gradient of ``P -> I_alpha(P, R)`` in the ambient coordinates.

    ``(alpha/(1-alpha)) [R**(alpha-1)/sum P R**(alpha-1) - P**(alpha-1)/sum P**alpha]``;
    for ``alpha == 1`` the KL gradient ``log(P/R) + 1``.
    """
    p, r = as_weights(P), as_weights(R)
    if alpha == 1:
        with np.errstate(divide="ignore"):
            return np.log(p) - np.log(r) + 1.0
    rp = np.exp(log_power(r, alpha - 1.0))
    pp = np.exp(log_power(p, alpha - 1.0))
    m = p > 0
    den_r = float(np.sum(p[m] * rp[m]))
    den_p = float(np.sum(p[m] ** alpha))
    if not (0 < den_r < math.inf and 0 < den_p < math.inf):
        raise DegenerateDenominator("gradient denominators must be positive and finite")
    return alpha / (1.0 - alpha) * (rp / den_r - pp / den_p)


# ---------------------------------------------------------------------------
# dual Newton


def _dual_terms(theta, F, rp, logr, alpha):
    """``log G``, ``grad G / G``, ``hess G / G`` and the member ``q`` at ``theta``."""
    if alpha == 1:
        l = logr - theta @ F
        lg = logsumexp(l)
        w = np.exp(l - lg)
        g = -(F @ w)
        H = (F * w) @ F.T
        return lg, g, H, w
    b = rp + (1.0 - alpha) * (theta @ F)
    if alpha < 1 and np.any(b <= 0):
        return math.inf, None, None, None
    pos = b > CLIP_EPS
    with np.errstate(divide="ignore"):
        l = np.where(pos, alpha / (alpha - 1.0) * np.log(np.where(pos, b, 1.0)), -np.inf)
    lg = logsumexp(l)
    w = np.exp(l - lg)
    v = np.where(pos, w / np.where(pos, b, 1.0), 0.0)
    g = -alpha * (F @ v)
    H = alpha * (F * np.where(pos, v / np.where(pos, b, 1.0), 0.0)) @ F.T
    return lg - math.log(alpha), g, H, v / v.sum()


def _log_G(theta, F, rp, logr, alpha):
    if alpha == 1:
        return logsumexp(logr - theta @ F)
    b = rp + (1.0 - alpha) * (theta @ F)
    if alpha < 1 and np.any(b <= 0):
        return math.inf
    pos = b > CLIP_EPS
    if not np.any(pos):
        return -math.inf
    return logsumexp(alpha / (alpha - 1.0) * np.log(b[pos])) - math.log(alpha)


def _newton(theta, F, rp, logr, alpha, tol, max_iter):
    """Damped Newton on ``log G``; returns ``(theta, q, residual, iterations)``."""
    k = F.shape[0]
    lg, g, H, q = _dual_terms(theta, F, rp, logr, alpha)
    if not np.isfinite(lg):
        raise ValueError("starting point is outside the dual domain")
    res = float(np.max(np.abs(F @ q))) if k else 0.0
    it = 0
    while res > tol and it < max_iter:
        it += 1
        reg = 1e-14 * max(1.0, float(np.trace(H)))
        try:
            step = -np.linalg.solve(H + reg * np.eye(k), g)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(H + reg * np.eye(k), g, rcond=None)[0]
        dec = float(g @ step)
        if not (dec < 0):
            step, dec = -g, -float(g @ g)
        s, accepted = 1.0, False
        for _ in range(MAX_HALVINGS):
            cand = theta + s * step
            lg_new = _log_G(cand, F, rp, logr, alpha)
            if lg_new <= lg + ARMIJO * s * dec:
                accepted = True
                break
            if np.isfinite(lg_new) and lg_new <= lg + 1e-13 * max(1.0, abs(lg)):
                # within rounding of the potential: accept if the moment residual drops
                _, _, _, q_new = _dual_terms(cand, F, rp, logr, alpha)
                if np.max(np.abs(F @ q_new)) < res:
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            break
        theta = cand
        lg, g, H, q = _dual_terms(theta, F, rp, logr, alpha)
        res = float(np.max(np.abs(F @ q)))
    return theta, q, res, it


# ---------------------------------------------------------------------------
# projected-gradient fallback


def _affine_projector(F, n):
    A = np.vstack([F, np.ones(n)])
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    pinv = np.linalg.pinv(A)
    return lambda x: x - pinv @ (A @ x - b)


def _project_feasible(x, affine, iters=500, tol=1e-15):
    """Dykstra's algorithm for the Euclidean projection onto ``{A x = b} ∩ {x >= 0}``."""
    y = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(iters):
        a = affine(y + p)
        p = y + p - a
        y_new = np.maximum(a + q, 0.0)
        q = a + q - y_new
        if np.max(np.abs(y_new - y)) < tol:
            y = y_new
            break
        y = y_new
    return y


def projected_gradient(L: LinearFamily, R, alpha: float, max_iter: int = 5000, start=None):
    """Minimize ``I_alpha(P, R)`` over the simplex intersected with ``L``.

    Projected gradient with Armijo backtracking; projections by Dykstra.
    Returns ``(P, iterations)``.
    """
    r = as_weights(R)
    mask, interior = L.support()
    affine = _affine_projector(L.F, L.n)
    P = interior.copy() if start is None else as_weights(start).copy()
    f = kernels.batch_divergence(P, r, alpha)[0]
    s = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            g = objective_gradient(np.where(mask, np.maximum(P, 1e-300), 0.0), r, alpha)
        g = np.where(mask, g, 0.0)
        g = np.clip(g, -1e8, 1e8)
        moved = False
        s = min(s * 2.0, 1e4)
        for _ in range(60):
            cand = _project_feasible(P - s * g, affine)
            cand = np.where(mask, cand, 0.0)
            fc = kernels.batch_divergence(cand, r, alpha)[0]
            if fc <= f - ARMIJO / s * float(np.sum((cand - P) ** 2)):
                moved = True
                break
            s *= 0.5
        if not moved:
            break
        delta = np.max(np.abs(cand - P))
        P, f = cand, fc
        if delta < 1e-14:
            break
    return P / P.sum(), it


def _fit_theta(P, F, rp, logr, alpha, tol=1e-12):
    """Least-squares power-law parameter of ``P`` on its support."""
    p = as_weights(P)
    m = p > tol * p.max()
    k = F.shape[0]
    if alpha == 1:
        A = np.hstack([np.ones((m.sum(), 1)), -F[:, m].T])
        sol = np.linalg.lstsq(A, np.log(p[m]) - logr[m], rcond=None)[0]
        return sol[1:]
    A = np.hstack([rp[m][:, None], F[:, m].T])
    sol = np.linalg.lstsq(A, p[m] ** (alpha - 1.0), rcond=None)[0]
    c, d = sol[0], sol[1:]
    if c <= 0:
        return np.zeros(k)
    return d / ((1.0 - alpha) * c)


# ---------------------------------------------------------------------------
# certificates


def kkt_certificate(Q, R, L: LinearFamily, alpha: float) -> dict:
    """Fit Lagrange multipliers for the projection problem at ``Q``.

    Stationarity ``grad(x) + lambda.f(x) + nu - mu(x) = 0`` with ``mu = 0`` on
    ``Supp(Q)``; ``lambda, nu`` come from least squares on the support and
    ``mu`` is read off elsewhere.  Residuals are relative to the gradient
    scale.  Symbols outside ``Supp(L)`` carry no sign condition.
    """
    q, r = as_weights(Q), as_weights(R)
    supp_L, _ = L.support()
    on = q > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        g = objective_gradient(q, r, alpha)
    A = np.hstack([L.F[:, on].T, np.ones((on.sum(), 1))])
    sol = np.linalg.lstsq(A, -g[on], rcond=None)[0]
    lam, nu = sol[:-1], float(sol[-1])
    scale = max(1.0, float(np.max(np.abs(g[on]))))
    stat = float(np.max(np.abs(A @ sol + g[on]))) / scale
    off = supp_L & ~on
    with np.errstate(invalid="ignore"):
        mu_off = g[off] + lam @ L.F[:, off] + nu
    mu = np.zeros(L.n)
    mu[off] = mu_off
    dual_violation = float(max(0.0, -np.min(mu_off, initial=0.0))) / scale
    primal = float(np.max(np.abs(L.F @ q), initial=0.0))
    return {
        "lambda": lam,
        "nu": nu,
        "mu": mu,
        "stationarity": stat,
        "dual_violation": dual_violation,
        "complementarity": float(np.max(np.abs(mu * q))),
        "primal": primal,
    }


def _gap_bound(b, L: LinearFamily, alpha: float) -> float:
    """``sup_{P in L} I(P,R) - I(P,Q) - I(Q,R)`` for ``alpha > 1``.

    For ``P`` in ``L`` the gap equals ``(alpha/(alpha-1)) log(sum P b_+ / sum P b)``
    with ``b`` the bracket at ``theta_star``.  The worst ratio is a linear
    fractional program, solved as an LP after the Charnes-Cooper change of
    variables.
    """
    bp = np.maximum(b, 0.0)
    if np.all(b >= 0):
        return 0.0
    n, k = L.n, L.k
    A_eq = np.vstack([L.F, bp[None, :]]) if k else bp[None, :]
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[-1] = 1.0
    res = linprog(b, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if res.status == 2:
        return 0.0
    if res.status != 0 or res.fun <= 0:
        return math.inf
    return max(0.0, alpha / (alpha - 1.0) * -math.log(res.fun))


# ---------------------------------------------------------------------------
# driver


def _restricted_problem(L, r, alpha):
    """Dual data on the working set: ``Supp(L)`` for ``alpha <= 1``, all of X otherwise."""
    mask, interior = L.support()
    work = mask.copy() if alpha <= 1 else np.ones(L.n, dtype=bool)
    if alpha <= 1 and np.any(r[work] <= 0):
        raise ValueError("R must be positive on the support of L")
    Fw = L.F[:, work]
    keep = independent_rows(Fw)
    Fw = Fw[keep]
    rw = r[work]
    rp = np.exp(log_power(rw, alpha - 1.0)) if alpha != 1 else np.ones(rw.size)
    with np.errstate(divide="ignore"):
        logr = np.log(rw)
    return work, keep, Fw, rp, logr


def _random_start(rng, Fw, rp, alpha):
    k = Fw.shape[0]
    if k == 0:
        return np.zeros(0)
    d = rng.normal(size=k)
    d /= np.linalg.norm(d)
    slope = np.max(np.abs(d @ Fw)) * (abs(1.0 - alpha) if alpha != 1 else 1.0)
    room = 0.9 * (np.min(rp) if alpha != 1 else 1.0) / max(slope, 1e-300)
    if alpha > 1:
        room *= 3.0
    return d * rng.uniform(0.0, 1.0) * room


def _assemble(L, r, alpha, work, keep, Fw, rp, theta_w, q_w, iters, method, opts, spread=0.0):
    n = L.n
    q = np.zeros(n)
    q[work] = q_w
    # clipped symbols whose bracket sits at round-off level
    q = np.where(q <= ROUNDOFF_MASS, 0.0, q)
    q = q / q.sum()
    theta = np.zeros(L.k)
    theta[keep] = theta_w
    if alpha == 1:
        Z = float(np.exp(logsumexp(np.log(np.maximum(r[work], 1e-300)) - theta_w @ Fw)))
        b_full = None
    else:
        b = rp + (1.0 - alpha) * (theta_w @ Fw)
        pos = b > CLIP_EPS
        Z = float(np.exp(logsumexp(np.log(b[pos]) / (alpha - 1.0))))
        b_full = np.full(n, -math.inf)
        b_full[work] = b
    cert = kkt_certificate(q, r, L, alpha)
    kkt = max(cert["primal"], cert["stationarity"], cert["dual_violation"])
    gap = _gap_bound(b_full, L, alpha) if alpha > 1 else 0.0
    status = Status.CONVERGED if kkt <= opts.kkt_tol else Status.MAX_ITERATIONS
    Q = ProbMeasure(q)
    return ProjectionResult(
        Q=Q,
        theta_star=theta,
        Z=Z,
        active_support=frozenset(int(i) for i in np.flatnonzero(q > 0)),
        kkt_residual=kkt,
        pythagorean_gap_bound=gap,
        status=status,
        L=L,
        R=ProbMeasure(r),
        alpha=float(alpha),
        divergence=relative_alpha_entropy(Q, r, alpha),
        iterations=iters,
        method=method,
        multistart_spread=spread,
        multipliers=cert,
    )


def forward_project(L: LinearFamily, R, alpha: float, opts: Optional[SolverOptions] = None) -> ProjectionResult:
    """Forward projection of ``R`` on ``L`` for any ``alpha > 0``.

    Raises :class:`~alphaproj.errors.Infeasible` if ``L`` is empty.  A run that
    misses ``opts.kkt_tol`` returns its best iterate with status
    ``MaxIterations``.  ``alpha == 1`` gives the classical I-projection.
    """
    opts = opts or SolverOptions()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    r = ProbMeasure(as_weights(R)).weights
    if r.size != L.n:
        raise DimensionMismatch(f"R has {r.size} symbols, L has {L.n}")
    if alpha > 1 and np.any(r <= 0):
        raise ValueError("alpha > 1 requires R with full support")
    work, keep, Fw, rp, logr = _restricted_problem(L, r, alpha)
    tol = opts.kkt_tol

    def solve_from(theta0):
        th, q, res, it = _newton(theta0, Fw, rp, logr, alpha, 0.1 * tol, opts.max_newton_iters)
        return th, q, res, it

    method = "newton"
    theta_w = np.zeros(Fw.shape[0])
    if opts.method != "fallback":
        theta_w, q_w, res, iters = solve_from(theta_w)
    else:
        res, iters = math.inf, 0
    result = None
    if res <= tol:
        result = _assemble(L, r, alpha, work, keep, Fw, rp, theta_w, q_w, iters, method, opts)
    if (result is None or not result.converged) and opts.method != "newton":
        P, pg_iters = projected_gradient(L, r, alpha, opts.max_fallback_iters)
        theta_fit = _fit_theta(P[work], Fw, rp, logr, alpha)
        if not np.isfinite(_log_G(theta_fit, Fw, rp, logr, alpha)):
            theta_fit = np.zeros(Fw.shape[0])
        th, q2, res2, it2 = solve_from(theta_fit)
        method = "fallback"
        if res2 <= tol:
            result = _assemble(L, r, alpha, work, keep, Fw, rp, th, q2, iters + pg_iters + it2, method, opts)
        else:
            # best iterate: the projected-gradient point, with the fitted parameter
            q_best = P[work]
            if result is None or kernels.batch_divergence(P, r, alpha)[0] < result.divergence:
                result = _assemble(L, r, alpha, work, keep, Fw, rp, theta_fit, q_best,
                                   iters + pg_iters + it2, method, opts)
    if result is None:
        result = _assemble(L, r, alpha, work, keep, Fw, rp, theta_w, q_w, iters, method, opts)
    if opts.multistart_count > 1 and result.converged:
        rng = np.random.default_rng(opts.rng_seed)
        spread = 0.0
        for _ in range(opts.multistart_count - 1):
            th0 = _random_start(rng, Fw, rp, alpha)
            th, q, res, _ = solve_from(th0)
            qf = np.zeros(L.n)
            qf[work] = q
            spread = max(spread, total_variation(qf, result.Q))
        result = replace(result, multistart_spread=spread)
    return result


def pythagorean_check(P, result: ProjectionResult, R=None, alpha: Optional[float] = None):
    """Both sides of the Pythagorean relation for ``P`` in ``L``.

    Returns ``(I(P,R), I(P,Q) + I(Q,R))``.  Equality is expected for
    ``alpha < 1``; for ``alpha > 1`` the left side dominates.
    """
    R = result.R if R is None else R
    alpha = result.alpha if alpha is None else alpha
    if not result.L.contains(P):
        raise NotInFamily("P does not satisfy the linear constraints")
    lhs = relative_alpha_entropy(P, R, alpha)
    rhs = relative_alpha_entropy(P, result.Q, alpha) + relative_alpha_entropy(result.Q, R, alpha)
    return lhs, rhs
