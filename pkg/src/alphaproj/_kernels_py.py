"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Selected automatically when the extension is not built, or forced with
``ALPHAPROJ_PURE_PYTHON=1``.
"""
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

CHUNK = 65536


def _row_log_sums(W, B, exponent):
    # log sum_x W * B**exponent per row, zero weights dropped
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.log(W)
        lb = np.log(B)
        t = lw + exponent * lb if exponent != 0 else lw + 0.0 * lb
    t = np.where(W > 0, t, -np.inf)
    t = np.where(np.isnan(t), -np.inf, t)
    with np.errstate(invalid="ignore"):
        return logsumexp(t, axis=-1)


def batch_divergence(P, Q, alpha):
    """Relative alpha-entropy of each row of ``P`` w.r.t. ``Q`` (rows or one vector)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.asarray(Q, dtype=float)
    Qb = np.broadcast_to(Q, P.shape)
    if alpha == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            t = P * (np.log(P) - np.log(Qb))
        t = np.where(P > 0, t, 0.0)
        out = t.sum(axis=1)
        return np.maximum(out, 0.0)
    cross = _row_log_sums(P, Qb, alpha - 1.0)
    sp = _row_log_sums(np.ones_like(P), P, alpha)
    sq = _row_log_sums(np.ones_like(Qb), Qb, alpha)
    with np.errstate(invalid="ignore"):
        out = alpha / (1.0 - alpha) * cross - sp / (1.0 - alpha) + sq
    if alpha < 1:
        out = np.where(cross == np.inf, np.inf, out)
    else:
        out = np.where(cross == -np.inf, np.inf, out)
    return np.maximum(out, 0.0)


def _compositions(N, n):
    """Yield chunks of all compositions of ``N`` into ``n`` nonnegative parts."""
    buf = []
    for bars in combinations(range(N + n - 1), n - 1):
        buf.append(bars)
        if len(buf) == CHUNK:
            yield _bars_to_counts(np.array(buf), N, n)
            buf = []
    if buf:
        yield _bars_to_counts(np.array(buf, dtype=int).reshape(len(buf), n - 1), N, n)


def _bars_to_counts(bars, N, n):
    m = bars.shape[0]
    ext = np.hstack([np.full((m, 1), -1), bars, np.full((m, 1), N + n - 1)])
    return np.diff(ext, axis=1) - 1


def lattice_min(N, F, slack, R, alpha):
    """Minimum of ``I(P, R)`` over lattice points ``c/N`` with ``|F P|_inf <= slack``.

    Returns ``(counts, value, n_kept)``; ``counts`` is ``None`` if no point passes.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    R = np.asarray(R, dtype=float)
    n = R.size
    best_val, best, kept = np.inf, None, 0
    for counts in _compositions(int(N), n):
        P = counts / float(N)
        if F.shape[0]:
            # filter on integer counts so both backends agree at the boundary
            ok = np.max(np.abs(counts @ F.T), axis=1) <= slack * N
            P, counts = P[ok], counts[ok]
        kept += P.shape[0]
        if P.shape[0] == 0:
            continue
        vals = batch_divergence(P, R, alpha)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best = float(vals[i]), counts[i].copy()
    return best, best_val, kept


def box_min(center, B, step, m, R, alpha):
    """Minimum of ``I(P, R)`` over ``P = center + step * B z`` for ``z`` in ``{-m..m}^d``.

    Points with a negative coordinate are skipped.  Returns ``(P, value, z)``.
    """
    center = np.asarray(center, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = B.shape[1]
    R = np.asarray(R, dtype=float)
    axis = np.arange(-m, m + 1, dtype=float)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=1)
    best_val, best_P, best_z = np.inf, None, None
    for s in range(0, Z.shape[0], CHUNK):
        z = Z[s:s + CHUNK]
        P = center[None, :] + step * (z @ B.T)
        ok = np.all(P >= 0.0, axis=1)
        if not np.any(ok):
            continue
        P, z = P[ok], z[ok]
        vals = batch_divergence(P, R, alpha)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_P, best_z = float(vals[i]), P[i].copy(), z[i].astype(int)
    return best_P, best_val, best_z
