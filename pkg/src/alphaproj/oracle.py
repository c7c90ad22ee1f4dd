"""Brute-force reference solvers used to check the fast paths.

None of these call the Newton solvers.  The forward oracle enumerates a
simplex lattice and then refines inside the affine hull of ``L``; the
reverse oracle scans a parameter grid point by point; the high-precision
divergence uses ``mpmath``.
"""
from __future__ import annotations

import math
from itertools import combinations
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
import scipy.linalg
from scipy.ndimage import minimum_filter

from . import kernels
from .divergence import relative_alpha_entropy
from .errors import AlphaProjError, TooLarge
from .families import LinearFamily, PowerLawFamily
from .measures import ProbMeasure, as_weights

__all__ = ["GridSpec", "grid_forward_oracle", "grid_reverse_oracle", "highprec_divergence"]

MAX_ALPHABET = 6
BOX_HALF_WIDTH = 10
MAX_RECENTER = 200
# coordinates below this are candidates for pinning to zero
FACE_THRESHOLD = 1e-2
MAX_PINNED = 4


@dataclass(frozen=True)
class GridSpec:
    """Lattice step and number of tenfold refinement rounds."""

    resolution: float = 0.02
    refine_rounds: int = 7

    def __post_init__(self):
        if not (self.resolution > 0):
            raise ValueError("resolution must be positive")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")


def _hull_projection(P0, F, mask, interior):
    """Closest point to ``P0`` in ``{F P = 0, sum P = 1, P = 0 off mask}``, kept nonnegative."""
    n = P0.size
    A = np.vstack([F[:, mask], np.ones(mask.sum())])
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    x = P0[mask] - np.linalg.pinv(A) @ (A @ P0[mask] - b)
    P = np.zeros(n)
    P[mask] = x
    if np.any(P < 0):
        # slide toward the interior point until every coordinate is nonnegative
        neg = P < 0
        t = np.max(-P[neg] / (interior[neg] - P[neg]))
        P = (1.0 - t) * P + t * interior
        P = np.maximum(P, 0.0)
    return P


def _refine(center, F, face, r, alpha, step, rounds):
    """Box-lattice descent inside ``{F P = 0, sum P = 1, P = 0 off face}``."""
    n = center.size
    A = np.vstack([F[:, face], np.ones(face.sum())])
    null = scipy.linalg.null_space(A)
    B = np.zeros((n, null.shape[1]))
    B[face] = null
    best_P = center
    best_val = float(kernels.batch_divergence(center, r, alpha)[0])
    if B.shape[1] == 0:
        return best_P, best_val
    m = BOX_HALF_WIDTH
    for rnd in range(rounds + 1):
        h = step * 10.0 ** (-rnd)
        for _ in range(MAX_RECENTER):
            P, val, z = kernels.box_min(best_P, B, h, m, r, alpha)
            if P is None:
                break
            if val < best_val or np.array_equal(P, best_P):
                best_P, best_val = P, float(val)
            if z is None or np.max(np.abs(z)) < m:
                break
    return best_P, best_val


def grid_forward_oracle(L: LinearFamily, R, alpha: float, g: GridSpec = GridSpec()):
    """Brute-force forward projection: returns ``(P_star, value)``.

    Compositions of ``N = ceil(1/resolution)`` filtered with slack
    ``2 * resolution * max|F|`` give the incumbent.  It is then moved onto
    the affine hull of ``L`` and refined on a box lattice spanned by a
    null-space basis, shrinking the step tenfold each round.  The same
    refinement is repeated on every face obtained by pinning small
    coordinates of the incumbent to zero, since a minimizer on the boundary
    is hard to reach from inside with a lattice.
    """
    r = ProbMeasure(as_weights(R)).weights
    n = r.size
    if n > MAX_ALPHABET:
        raise TooLarge(f"grid oracle is limited to {MAX_ALPHABET} symbols, got {n}")
    if n <= 5 and g.resolution > 0.05:
        raise ValueError("resolution must be at most 0.05 for alphabets of size <= 5")
    N = int(math.ceil(1.0 / g.resolution - 1e-9))
    step = 1.0 / N
    F = L.F if L.k else np.zeros((0, n))
    slack = 2.0 * step * (float(np.max(np.abs(F))) if F.size else 0.0)
    counts, _, _ = kernels.lattice_min(N, F, slack, r, alpha)
    mask, interior = L.support()
    if counts is None:
        center = interior
    else:
        center = _hull_projection(counts / float(N), F, mask, interior)
    best_P, best_val = _refine(center, F, mask, r, alpha, step, g.refine_rounds)
    small = np.flatnonzero(mask & (best_P < FACE_THRESHOLD))[:MAX_PINNED]
    for size in range(1, small.size + 1):
        for pinned in combinations(small, size):
            face = mask.copy()
            face[list(pinned)] = False
            if not np.any(face):
                continue
            c = _face_point(best_P, F, face)
            if c is None:
                continue
            P, val = _refine(c, F, face, r, alpha, step * 10.0 ** (-2), g.refine_rounds)
            if val < best_val:
                best_P, best_val = P, val
    w = np.maximum(best_P, 0.0)
    w = w / w.sum()
    return ProbMeasure(w), float(kernels.batch_divergence(w, r, alpha)[0])


def _face_point(P0, F, face):
    """Projection of ``P0`` onto the face's affine hull, or ``None`` if it leaves the simplex."""
    A = np.vstack([F[:, face], np.ones(face.sum())])
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    x = P0[face] - np.linalg.pinv(A) @ (A @ P0[face] - b)
    if np.max(np.abs(A @ x - b)) > 1e-10 or np.any(x < -1e-15):
        return None
    P = np.zeros(P0.size)
    P[face] = np.maximum(x, 0.0)
    return P


def _member_fn(family):
    if isinstance(family, PowerLawFamily):
        return lambda th: family.member_and_Z(np.atleast_1d(th))[0]
    return lambda th: as_weights(family(th))


def _safe_value(member, P_hat, alpha, theta):
    try:
        w = member(theta)
    except (AlphaProjError, ValueError, FloatingPointError):
        return math.inf
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-9:
        return math.inf
    return relative_alpha_entropy(P_hat, np.maximum(w, 0.0) / w.sum(), alpha)


def grid_reverse_oracle(family, P_hat, alpha: float, grid: Sequence[tuple], zoom_rounds: int = 10,
                        zoom_points: int = 21):
    """All grid-local minima of ``theta -> I_alpha(P_hat, P_theta)``, refined by zooming.

    ``family`` is a :class:`PowerLawFamily` or a callable returning member
    weights.  ``grid`` gives ``(lo, hi, step)`` per parameter coordinate.
    Inadmissible points count as ``+inf``.  Each minimum is refined by
    re-gridding a shrinking box around it.  Returns a list of
    ``(theta, value)`` sorted by value.
    """
    member = _member_fn(family)
    axes = [np.arange(lo, hi + 0.5 * st, st) for lo, hi, st in grid]
    steps = np.array([st for _, _, st in grid], dtype=float)
    shape = tuple(a.size for a in axes)
    vals = np.empty(shape)
    for idx in np.ndindex(*shape):
        th = np.array([axes[j][idx[j]] for j in range(len(axes))])
        vals[idx] = _safe_value(member, P_hat, alpha, th)
    finite = np.isfinite(vals)
    if not np.any(finite):
        return []
    filled = np.where(finite, vals, np.inf)
    local = (filled == minimum_filter(filled, size=3, mode="nearest")) & finite
    minima = []
    seen = set()
    for idx in zip(*np.nonzero(local)):
        th = np.array([axes[j][idx[j]] for j in range(len(axes))])
        th, v = _zoom(member, P_hat, alpha, th, steps, zoom_rounds, zoom_points)
        key = tuple(np.round(th, 8))
        if key in seen:
            continue
        seen.add(key)
        minima.append((th, v))
    minima.sort(key=lambda t: t[1])
    return minima


def _zoom(member, P_hat, alpha, th, steps, rounds, pts):
    best_th, best_v = th, _safe_value(member, P_hat, alpha, th)
    half = steps.copy()
    for _ in range(rounds):
        axes = [np.linspace(best_th[j] - half[j], best_th[j] + half[j], pts) for j in range(th.size)]
        center = best_th
        for idx in np.ndindex(*(pts,) * th.size):
            cand = np.array([axes[j][idx[j]] for j in range(th.size)])
            v = _safe_value(member, P_hat, alpha, cand)
            if v < best_v:
                best_th, best_v = cand, v
        # keep two lattice spacings around the incumbent
        half = half * 4.0 / (pts - 1)
        if np.array_equal(center, best_th) and np.all(half < 1e-13):
            break
    return best_th, best_v


def highprec_divergence(P, Q, alpha, dps: int = 50):
    """Relative alpha-entropy in ``mpmath`` arithmetic with at least ``dps`` digits.

    Inputs are converted exactly from their binary floating values.
    Returns an ``mpf`` (``mpf('inf')`` under the infinity conditions).
    """
    dps = max(int(dps), 50)
    p, q = as_weights(P), as_weights(Q)
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        pm = [mpmath.mpf(float(x)) for x in p]
        qm = [mpmath.mpf(float(x)) for x in q]
        if a == 1:
            s = mpmath.mpf(0)
            for x, y in zip(pm, qm):
                if x > 0:
                    if y == 0:
                        return mpmath.inf
                    s += x * mpmath.log(x / y)
            return +s
        cross = mpmath.mpf(0)
        for x, y in zip(pm, qm):
            if x > 0:
                if y == 0:
                    if a < 1:
                        return mpmath.inf
                    continue
                cross += x * mpmath.power(y, a - 1)
        if a > 1 and cross == 0:
            return mpmath.inf
        sp = mpmath.fsum(mpmath.power(x, a) for x in pm if x > 0)
        sq = mpmath.fsum(mpmath.power(y, a) for y in qm if y > 0)
        val = a / (1 - a) * mpmath.log(cross) - mpmath.log(sp) / (1 - a) + mpmath.log(sq)
        return +val
