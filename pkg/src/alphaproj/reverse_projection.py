"""Reverse projection ``argmin_theta I_alpha(P_hat, P_theta)`` on a power-law family.

The fast path tilts the constraint functions so that ``P_hat`` lies in a
linear family ``L_tilde`` and then forward-projects ``R`` onto it.  Its
answer is classified as a family member, a boundary (closure) point, or a
point that needs the clipped extension.  Direct parameter scans and an
iterative mixture-based minimizer are provided for checking.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import linprog, minimize, minimize_scalar
from scipy.special import logsumexp

from . import kernels
from .divergence import relative_alpha_entropy
from .errors import DegenerateDenominator, DimensionMismatch, NotConverged
from .families import (
    ExtendedPowerLawFamily,
    LinearFamily,
    PowerLawFamily,
    extended_member_check,
    orthogonal_linear_family,
    tilt_coefficients,
)
from .forward_projection import ProjectionResult, SolverOptions, forward_project
from .measures import ProbMeasure, as_weights, escort, geometric_mixture, log_power, total_variation

__all__ = [
    "Case",
    "ReverseOutcome",
    "SampleSet",
    "ScanResult",
    "IterativeResult",
    "reverse_project",
    "closure_sequence",
    "parametric_reverse_scan",
    "binomial_family",
    "iterative_log_convex_minimize",
    "mean_power_likelihood",
    "mmple_fit",
    "estimating_equation_residual",
    "score",
]

FIT_TOL = 1e-8
SEQUENCE_NS = tuple(10 ** j for j in range(1, 7))


class Case(str, enum.Enum):
    IN_FAMILY = "InFamily"
    IN_CLOSURE_ONLY = "InClosureOnly"
    REQUIRES_EXTENSION = "RequiresExtension"


@dataclass(frozen=True)
class ReverseOutcome:
    """Result of :func:`reverse_project`.

    ``theta`` is the family parameter of ``Q`` (the clipped-member parameter
    for ``RequiresExtension``) or ``None`` when ``Q`` is only a boundary
    limit; ``theta_tag`` then reads ``"boundary-limit"``.  ``theta_tilde``
    parametrizes ``Q`` in the family built on the rows of ``L_tilde.F``.
    ``extended_check`` reports membership of ``Q`` in the clipped extension
    over the tilted functions when that extension is needed.
    """

    case: Case
    Q: ProbMeasure
    theta: Optional[np.ndarray]
    divergence: float
    L_tilde: LinearFamily
    tau: np.ndarray
    theta_tilde: np.ndarray
    forward: ProjectionResult
    theta_tag: str = ""
    closure: Optional[dict] = None
    extended_check: Optional[bool] = None
    mean_power_likelihood: Optional[float] = None


@dataclass(frozen=True)
class SampleSet:
    """Observed symbol indices on an alphabet of ``n_symbols`` letters."""

    observations: tuple
    n_symbols: int

    def __post_init__(self):
        obs = tuple(int(x) for x in self.observations)
        if len(obs) == 0:
            raise ValueError("a sample set needs at least one observation")
        if min(obs) < 0 or max(obs) >= self.n_symbols:
            raise DimensionMismatch("observation outside the alphabet")
        object.__setattr__(self, "observations", obs)

    def __len__(self):
        return len(self.observations)

    def counts(self) -> np.ndarray:
        return np.bincount(np.asarray(self.observations), minlength=self.n_symbols)

    def empirical(self) -> ProbMeasure:
        return ProbMeasure(self.counts() / len(self.observations))

    @classmethod
    def from_csv(cls, path, n_symbols: int) -> "SampleSet":
        """One integer symbol index per line; blank lines are skipped."""
        obs = np.loadtxt(path, dtype=int, delimiter=",", ndmin=1, usecols=0)
        return cls(tuple(obs.tolist()), n_symbols)


# ---------------------------------------------------------------------------
# reverse projection through the orthogonal linear family


def _span_fit(q, M: PowerLawFamily):
    """Write ``q**(alpha-1) = c R**(alpha-1) + (1-alpha) theta.f`` with ``c >= 0``.

    Returns ``(c, theta)`` or ``None`` when no such exact representation
    exists.  For ``alpha > 1`` this is the closure test: the closure of the
    family is the set of measures whose power is such a nonnegative
    combination.
    """
    y = np.exp(log_power(q, M.alpha - 1.0))
    A = np.hstack([M.r_power()[:, None], (1.0 - M.alpha) * M.F.T])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    scale = max(1.0, float(np.max(np.abs(y))))
    if np.max(np.abs(A @ sol - y)) > FIT_TOL * scale:
        return None
    if sol[0] >= -FIT_TOL:
        return max(float(sol[0]), 0.0), sol[1:]
    # representation not unique: look for one with the largest c
    rank = np.linalg.matrix_rank(A)
    if rank == A.shape[1]:
        return None
    b = A @ sol
    res = linprog(np.concatenate([[-1.0], np.zeros(M.k)]), A_eq=A, b_eq=b,
                  bounds=[(None, None)] * (M.k + 1), method="highs")
    if res.status == 3:
        # unbounded c: any large value works
        return 1.0, None
    if res.status != 0 or res.x[0] < -FIT_TOL:
        return None
    return max(float(res.x[0]), 0.0), res.x[1:]


def closure_sequence(M: PowerLawFamily, Q, L_tilde: LinearFamily, opts: Optional[SolverOptions] = None,
                     ns: Sequence[int] = SEQUENCE_NS) -> dict:
    """Approach ``Q`` by projections that lie inside the family.

    For each ``n`` the measure ``(1 - 1/n) Q + (1/n) R`` (full support)
    defines a re-tilted linear family; the forward projection of ``R`` on it
    is recorded with its distance to ``Q``.  ``converged`` is set when all
    projections are family members and the distances vanish at a
    polynomial rate.
    """
    opts = opts or SolverOptions()
    q, r = as_weights(Q), M.R
    tilted = PowerLawFamily(M.alpha, r, L_tilde.F)
    rows = []
    for n in ns:
        P_n = (1.0 - 1.0 / n) * q + r / n
        L_n = orthogonal_linear_family(tilted, P_n)
        try:
            res = forward_project(L_n, r, M.alpha, opts)
        except Exception as exc:  # pragma: no cover - reported, not raised
            rows.append({"n": int(n), "tv": math.inf, "member": False, "error": str(exc)})
            continue
        qn = res.Q.weights
        rows.append({
            "n": int(n),
            "tv": total_variation(qn, q),
            "member": bool(res.converged and np.all(qn > 0)),
        })
    tv = np.array([row["tv"] for row in rows])
    ok = np.isfinite(tv) & (tv > 1e-15)
    slope = -math.inf
    if ok.sum() >= 2:
        x = np.log([row["n"] for row, k in zip(rows, ok) if k])
        slope = float(np.polyfit(x, np.log(tv[ok]), 1)[0])
    decreasing = bool(np.all(np.diff(tv) <= 1e-12))
    converged = bool(
        all(row["member"] for row in rows) and decreasing and tv[-1] <= 1e-3 and slope <= -0.25
    )
    return {"steps": rows, "rate": slope, "converged": converged}


def reverse_project(M: PowerLawFamily, P_hat, opts: Optional[SolverOptions] = None) -> ReverseOutcome:
    """Reverse projection of ``P_hat`` on ``M`` via the orthogonal linear family.

    ``Q`` is the forward projection of ``R`` on ``L_tilde``.  For
    ``alpha <= 1`` it is a member when it has full support and a closure
    point otherwise.  For ``alpha > 1`` membership and closure are decided
    by an exact span fit, backed by the mixing sequence of
    :func:`closure_sequence`; failing both, ``Q`` needs the clipped
    extension.
    """
    opts = opts or SolverOptions()
    ph = ProbMeasure(as_weights(P_hat)).weights
    if ph.size != M.n:
        raise DimensionMismatch(f"P_hat has {ph.size} symbols, family has {M.n}")
    if np.any(M.R <= 0):
        raise ValueError("reverse projection needs R with full support")
    alpha = M.alpha
    # the associated linear family must be nonempty (raises Infeasible)
    M.linear_family().support()
    tau = tilt_coefficients(M, ph)
    L_tilde = orthogonal_linear_family(M, ph)
    fwd = forward_project(L_tilde, M.R, alpha, opts)
    q = fwd.Q.weights
    theta_tilde = np.zeros(M.k)
    theta_tilde[L_tilde.rows] = fwd.theta_star
    # R^(a-1) + (1-a) th.(f - tau R^(a-1)) = c R^(a-1) + (1-a) th.f
    c = 1.0 - (1.0 - alpha) * float(theta_tilde @ tau) if alpha != 1 else 1.0
    theta = theta_tilde / c if c > 0 else None
    full = bool(np.all(q > 0))
    closure = None
    ext = None
    tag = ""
    if alpha <= 1:
        if full and theta is not None:
            case = Case.IN_FAMILY
        else:
            case, theta, tag = Case.IN_CLOSURE_ONLY, None, "boundary-limit"
            closure = closure_sequence(M, q, L_tilde, opts)
    else:
        fit = _span_fit(q, M)
        if full and fit is not None and fit[0] > FIT_TOL:
            case = Case.IN_FAMILY
            if theta is None and fit[1] is not None:
                theta = fit[1] / fit[0]
        elif fit is not None:
            case, theta, tag = Case.IN_CLOSURE_ONLY, None, "boundary-limit"
        else:
            closure = closure_sequence(M, q, L_tilde, opts)
            if closure["converged"]:
                case, theta, tag = Case.IN_CLOSURE_ONLY, None, "boundary-limit"
            else:
                # the extension is built on the tilted functions and anchored
                # at the projection on L_tilde, i.e. at Q itself
                case = Case.REQUIRES_EXTENSION
                tilted = PowerLawFamily(alpha, M.R, L_tilde.F)
                ext = extended_member_check(ExtendedPowerLawFamily(tilted, fwd.theta_star), q, fwd.theta_star)
    return ReverseOutcome(
        case=case,
        Q=fwd.Q,
        theta=theta,
        divergence=relative_alpha_entropy(ph, q, alpha),
        L_tilde=L_tilde,
        tau=tau,
        theta_tilde=theta_tilde,
        forward=fwd,
        theta_tag=tag,
        closure=closure,
        extended_check=ext,
    )


# ---------------------------------------------------------------------------
# parameter scans


def binomial_family(theta):
    """``((1-t)**2, 2 t (1-t), t**2)`` for scalar or array ``t`` in ``[0, 1]``."""
    t = np.asarray(theta, dtype=float)
    if t.ndim and t.shape[-1] == 1 and t.ndim == 1:
        t = t[0]
    if np.any((t < 0) | (t > 1)):
        raise ValueError("binomial parameter must lie in [0, 1]")
    return np.stack([(1 - t) ** 2, 2 * t * (1 - t), t ** 2], axis=-1)


@dataclass(frozen=True)
class ScanResult:
    """Dense evaluation of ``theta -> I_alpha(P_hat, P_theta)`` and its minima."""

    thetas: np.ndarray
    values: np.ndarray
    minima: list
    global_minima: list

    def series(self) -> np.ndarray:
        """Two-column ``(theta, value)`` array for plotting (1-D scans)."""
        return np.column_stack([self.thetas.reshape(len(self.values.ravel()), -1)[:, 0],
                                self.values.ravel()])


def _members(family, thetas):
    """Member weights for a batch of parameter vectors; ``nan`` rows if inadmissible."""
    if family is binomial_family:
        t = thetas[:, 0]
        ok = (t >= 0) & (t <= 1)
        out = np.full((t.size, 3), np.nan)
        out[ok] = binomial_family(t[ok])
        return out
    rows = []
    for th in thetas:
        try:
            if isinstance(family, PowerLawFamily):
                w = family.member_and_Z(th)[0]
            else:
                w = as_weights(family(th))
        except (ValueError, ArithmeticError):
            w = None
        rows.append(w)
    n = next((w.size for w in rows if w is not None), 0)
    return np.array([w if w is not None else np.full(n, np.nan) for w in rows])


def _point_value(family, P_hat, alpha, th):
    W = _members(family, np.atleast_2d(th))
    if np.any(np.isnan(W)):
        return math.inf
    return float(kernels.batch_divergence(P_hat, W[0], alpha)[0])


def parametric_reverse_scan(family, P_hat, grid: Sequence[tuple], alpha: Optional[float] = None,
                            tie_tol: float = 1e-9) -> ScanResult:
    """Scan ``theta -> I_alpha(P_hat, P_theta)`` on a grid and refine all local minima.

    ``family`` is a :class:`PowerLawFamily` (``alpha`` defaults to its own)
    or a callable ``theta -> weights``; ``grid`` lists ``(lo, hi, step)`` per
    coordinate.  Local minima are polished with a bounded Brent search in
    one dimension and Nelder-Mead otherwise.  Minima whose value is within
    ``tie_tol`` of the best are reported as global.
    """
    if alpha is None:
        alpha = family.alpha
    ph = as_weights(P_hat)
    axes = [np.arange(lo, hi + 0.5 * st, st) for lo, hi, st in grid]
    axes = [np.round(a, 12) for a in axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    thetas = np.stack([m.ravel() for m in mesh], axis=1)
    W = _members(family, thetas)
    vals = np.full(thetas.shape[0], np.inf)
    ok = ~np.any(np.isnan(W), axis=1)
    if np.any(ok):
        vals[ok] = kernels.batch_divergence(np.broadcast_to(ph, W[ok].shape), W[ok], alpha)
    shape = tuple(a.size for a in axes)
    V = vals.reshape(shape)
    local = (V == minimum_filter(V, size=3, mode="nearest")) & np.isfinite(V)
    steps = np.array([st for _, _, st in grid], dtype=float)
    minima = []
    for idx in zip(*np.nonzero(local)):
        th0 = np.array([axes[j][idx[j]] for j in range(len(axes))])
        th, v = _polish(family, ph, alpha, th0, V[idx], steps, axes, idx)
        if any(np.max(np.abs(th - m[0])) < 1e-6 for m in minima):
            continue
        minima.append((th, v))
    minima.sort(key=lambda m: (m[1], tuple(m[0])))
    best = minima[0][1] if minima else math.inf
    glob = [m for m in minima if m[1] <= best + tie_tol]
    return ScanResult(thetas=thetas.squeeze() if len(axes) == 1 else thetas, values=V,
                      minima=minima, global_minima=glob)


def _polish(family, ph, alpha, th0, v0, steps, axes, idx):
    f = lambda th: _point_value(family, ph, alpha, th)
    if th0.size == 1:
        lo = th0[0] - steps[0]
        hi = th0[0] + steps[0]
        lo, hi = max(lo, axes[0][0]), min(hi, axes[0][-1])
        if hi <= lo:
            return th0, v0
        # parabolic vertex through the three grid values as a first guess
        fl, fh = f([lo]), f([hi])
        guess = th0[0]
        den = fl - 2 * v0 + fh
        if np.isfinite(den) and den > 0 and hi - lo == 2 * steps[0]:
            guess = th0[0] + 0.5 * steps[0] * (fl - fh) / den
        res = minimize_scalar(lambda t: f([t]), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        cands = [(th0[0], v0), (guess, f([guess])), (float(res.x), float(res.fun))]
        t, v = min(cands, key=lambda c: c[1])
        return np.array([t]), v
    res = minimize(f, th0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "initial_simplex":
                            np.vstack([th0] + [th0 + steps[j] * np.eye(th0.size)[j] for j in range(th0.size)])})
    if res.fun < v0:
        return np.asarray(res.x), float(res.fun)
    return th0, float(v0)


# ---------------------------------------------------------------------------
# iterative minimization over a log-convex family


@dataclass(frozen=True)
class IterativeResult:
    """Limit of the mixture iteration with its Cauchy diagnostics.

    ``hellinger_steps[i]`` is the squared Hellinger distance between the
    escorts of accepted iterates ``i`` and ``i + 1``; ``tail_sums[i]`` is the
    sum of the steps from ``i`` on.  ``terminal_tail`` is the summed escort
    movement over the final window of draws, the quantity used to stop.
    """

    Q: ProbMeasure
    value: float
    iterations: int
    iterates: list
    values: list
    hellinger_steps: np.ndarray
    tail_sums: np.ndarray
    hellinger_bound_ok: bool
    terminal_tail: float = 0.0


def _hellinger_sq(P, Q):
    return float(np.sum((np.sqrt(as_weights(P)) - np.sqrt(as_weights(Q))) ** 2))


def iterative_log_convex_minimize(sampler, R, alpha: float, rng_seed: int = 0, max_iter: int = 5000,
                                  patience: int = 40, tol: float = 1e-10) -> IterativeResult:
    """Minimize ``P -> I_alpha(R, P)`` over a log-convex family (``alpha < 1``).

    ``sampler(rng)`` returns a random member; each candidate is mixed
    geometrically with the current iterate and the best mixture weight is
    found by a bounded line search.  Mixtures stay in the family, and a
    step is taken only when it lowers the objective.  The run stops once
    the escort steps over the last ``patience`` draws sum to less than
    ``tol``.  A plain measure in place of ``sampler`` is a one-member family.
    """
    if alpha >= 1:
        raise ValueError("the Cauchy argument needs alpha < 1")
    r = as_weights(R)
    if not callable(sampler):
        P = ProbMeasure(as_weights(sampler))
        v = relative_alpha_entropy(r, P, alpha)
        return IterativeResult(P, v, 0, [P], [v], np.zeros(0), np.zeros(0), True)
    rng = np.random.default_rng(rng_seed)
    P = ProbMeasure(as_weights(sampler(rng)))
    v = relative_alpha_entropy(r, P, alpha)
    iterates, values = [P], [v]
    window = []
    it = 0
    for it in range(1, max_iter + 1):
        S = ProbMeasure(as_weights(sampler(rng)))

        def obj(t):
            try:
                return relative_alpha_entropy(r, geometric_mixture(S, P, t), alpha)
            except Exception:
                return math.inf

        res = minimize_scalar(obj, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
        t_best, v_best = float(res.x), float(res.fun)
        v_one = obj(1.0)
        if v_one < v_best:
            t_best, v_best = 1.0, v_one
        step = 0.0
        if v_best < v:
            new = geometric_mixture(S, P, t_best)
            step = _hellinger_sq(escort(new, alpha), escort(P, alpha))
            P, v = new, v_best
            iterates.append(P)
            values.append(v)
        window.append(step)
        if len(window) > patience:
            window.pop(0)
        if len(window) == patience and sum(window) < tol:
            break
    else:
        raise NotConverged(f"no Cauchy termination after {max_iter} draws")
    esc = [escort(p, alpha) for p in iterates]
    steps = np.array([_hellinger_sq(esc[i + 1], esc[i]) for i in range(len(esc) - 1)])
    tails = np.cumsum(steps[::-1])[::-1] if steps.size else np.zeros(0)
    # pairwise bound H^2 <= 2 (1 - exp(-(I_m + I_n)/2 + I*)), with I* the final value
    bound_ok = True
    for i in range(len(esc)):
        for j in range(i + 1, len(esc)):
            bound = 2.0 * (1.0 - math.exp(-(0.5 * (values[i] + values[j]) - v)))
            if _hellinger_sq(esc[i], esc[j]) > bound + 1e-9:
                bound_ok = False
    return IterativeResult(P, v, it, iterates, values, steps, tails, bound_ok, float(sum(window)))


# ---------------------------------------------------------------------------
# estimation from samples


def mean_power_likelihood(P, samples: SampleSet, c: float) -> float:
    """``(1/c) log((1/n) sum_i P(x_i)**c) - (1/(1+c)) log sum_x P(x)**(1+c)``.

    ``c -> 0`` gives the mean log-likelihood.
    """
    p = as_weights(P)
    obs = np.asarray(samples.observations)
    if c == 0:
        with np.errstate(divide="ignore"):
            return float(np.mean(np.log(p[obs])))
    with np.errstate(divide="ignore"):
        lp = np.log(p[obs])
    first = (logsumexp(c * lp) - math.log(obs.size)) / c
    m = p > 0
    second = logsumexp((1.0 + c) * np.log(p[m])) / (1.0 + c)
    return float(first - second)


def mmple_fit(M: PowerLawFamily, samples: SampleSet, c: float, opts: Optional[SolverOptions] = None
              ) -> ReverseOutcome:
    """Maximum mean-power-likelihood estimate with ``alpha = c + 1``.

    Delegates to :func:`reverse_project` with the empirical measure and adds
    the mean power likelihood of the fitted measure.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if not math.isclose(M.alpha, c + 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"family has alpha={M.alpha}, expected c + 1 = {c + 1}")
    out = reverse_project(M, samples.empirical(), opts)
    mpl = mean_power_likelihood(out.Q, samples, c)
    return replace(out, mean_power_likelihood=mpl)


def score(M, theta, step: float = 1e-6) -> np.ndarray:
    """``d/dtheta log P_theta(x)`` as a ``(k, |X|)`` array.

    Closed form for :class:`PowerLawFamily`; central differences of
    ``log family(theta)`` for a generic callable.
    """
    if isinstance(M, PowerLawFamily):
        th = M._theta(theta)
        if M.alpha == 1:
            p = M.member_and_Z(th)[0]
            return -M.F + (M.F @ p)[:, None]
        b = M.base(th)
        if np.any(b <= 0):
            raise ValueError("score needs a full-support member")
        Z = M.normalizer(th)
        dlogZ = -(M.F @ np.exp((2.0 - M.alpha) / (M.alpha - 1.0) * np.log(b))) / Z
        return -M.F / b[None, :] - dlogZ[:, None]
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    rows = []
    for j in range(th.size):
        e = np.zeros(th.size)
        e[j] = step
        rows.append((np.log(as_weights(M(th + e))) - np.log(as_weights(M(th - e)))) / (2 * step))
    return np.array(rows)


def estimating_equation_residual(M, samples: SampleSet, theta, c: float) -> np.ndarray:
    """``sum_i P(x_i)^c s(x_i) / sum_i P(x_i)^c - sum_x P^(c+1) s / sum_x P^(c+1)``.

    ``P = P_theta`` and ``s`` is the score.  ``c = 0`` is the likelihood
    equation ``E_{P_hat} s = E_{P_theta} s``.
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    if isinstance(M, PowerLawFamily):
        p = M.member_and_Z(theta)[0]
    else:
        p = as_weights(M(np.atleast_1d(np.asarray(theta, dtype=float))))
    s = score(M, theta)
    obs = np.asarray(samples.observations)
    w_obs = p[obs] ** c
    den = float(w_obs.sum())
    if not den > 0:
        raise DegenerateDenominator("all sample weights vanish")
    lhs = (s[:, obs] @ w_obs) / den
    w = p ** (c + 1.0)
    rhs = (s @ w) / w.sum()
    return lhs - rhs
