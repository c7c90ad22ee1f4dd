# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched relative alpha-entropy and brute-force minima.

Same signatures and enumeration order as ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, fabs, INFINITY

cnp.import_array()


cdef double _logsum_pow(const double[:] w, const double[:] b, double e, bint unit_w) noexcept nogil:
    # log sum_x w(x) b(x)^e, zero weights dropped, 0^neg = inf
    cdef Py_ssize_t i, n = b.shape[0]
    cdef double m = -INFINITY, t, s = 0.0, wi
    for i in range(n):
        wi = 1.0 if unit_w else w[i]
        if wi <= 0.0:
            continue
        if b[i] <= 0.0:
            if e < 0.0:
                return INFINITY
            if e > 0.0:
                continue
            t = log(wi)
        else:
            t = log(wi) + e * log(b[i])
        if t > m:
            m = t
    if m == -INFINITY:
        return -INFINITY
    for i in range(n):
        wi = 1.0 if unit_w else w[i]
        if wi <= 0.0:
            continue
        if b[i] <= 0.0:
            if e > 0.0:
                continue
            t = log(wi)
        else:
            t = log(wi) + e * log(b[i])
        s += exp(t - m)
    return m + log(s)


cdef double _div(const double[:] p, const double[:] q, double alpha) noexcept nogil:
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double cross, sp, sq, v = 0.0
    if alpha == 1.0:
        for i in range(n):
            if p[i] > 0.0:
                if q[i] <= 0.0:
                    return INFINITY
                v += p[i] * (log(p[i]) - log(q[i]))
        return v if v > 0.0 else 0.0
    cross = _logsum_pow(p, q, alpha - 1.0, False)
    if alpha < 1.0 and cross == INFINITY:
        return INFINITY
    if alpha > 1.0 and cross == -INFINITY:
        return INFINITY
    sp = _logsum_pow(p, p, alpha, True)
    sq = _logsum_pow(q, q, alpha, True)
    v = alpha / (1.0 - alpha) * cross - sp / (1.0 - alpha) + sq
    return v if v > 0.0 else 0.0


def batch_divergence(P, Q, double alpha):
    """Relative alpha-entropy of each row of ``P`` w.r.t. ``Q`` (rows or one vector)."""
    cdef const double[:, ::1] Pv = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    Qa = np.asarray(Q, dtype=np.float64)
    cdef const double[:, ::1] Qv = np.ascontiguousarray(np.broadcast_to(Qa, (Pv.shape[0], Pv.shape[1])))
    cdef Py_ssize_t i, m = Pv.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = _div(Pv[i], Qv[i], alpha)
    return out


def lattice_min(long N, F, double slack, R, double alpha):
    """Minimum of ``I(P, R)`` over lattice points ``c/N`` with ``|F P|_inf <= slack``.

    Returns ``(counts, value, n_kept)``; ``counts`` is ``None`` if no point passes.
    """
    cdef const double[:, ::1] Fv = np.ascontiguousarray(np.atleast_2d(np.asarray(F, dtype=np.float64)))
    cdef const double[::1] Rv = np.ascontiguousarray(R, dtype=np.float64)
    cdef Py_ssize_t n = Rv.shape[0], k = Fv.shape[0] if Fv.shape[1] == n else 0
    cdef Py_ssize_t nb = n - 1, i, j, top = N + n - 1
    cdef long[::1] bars = np.arange(nb, dtype=np.int64) if nb > 0 else np.zeros(1, dtype=np.int64)
    cdef double[::1] p = np.empty(n)
    best = np.zeros(n, dtype=np.int64)
    cdef long[::1] bv = best
    cdef double[::1] cnt = np.empty(n)
    cdef double best_val = INFINITY, val, acc, dN = <double>N, lim = slack * N
    cdef long kept = 0, prev
    cdef bint ok, found = False
    while True:
        prev = -1
        for i in range(nb):
            cnt[i] = bars[i] - prev - 1
            prev = bars[i]
        cnt[n - 1] = top - 1 - prev
        for i in range(n):
            p[i] = cnt[i] / dN
        ok = True
        for j in range(k):
            # filter on integer counts so both backends agree at the boundary
            acc = 0.0
            for i in range(n):
                acc += Fv[j, i] * cnt[i]
            if fabs(acc) > lim:
                ok = False
                break
        if ok:
            kept += 1
            val = _div(p, Rv, alpha)
            if val < best_val:
                best_val = val
                found = True
                for i in range(n):
                    bv[i] = <long>cnt[i]
        # next combination of bars in lexicographic order
        i = nb - 1
        while i >= 0 and bars[i] == top - nb + i:
            i -= 1
        if i < 0:
            break
        bars[i] += 1
        for j in range(i + 1, nb):
            bars[j] = bars[j - 1] + 1
    return (best if found else None), best_val, kept


def box_min(center, B, double step, long m, R, double alpha):
    """Minimum of ``I(P, R)`` over ``P = center + step * B z`` for ``z`` in ``{-m..m}^d``.

    Points with a negative coordinate are skipped.  Returns ``(P, value, z)``.
    """
    cdef const double[::1] c = np.ascontiguousarray(center, dtype=np.float64)
    cdef const double[:, ::1] Bv = np.ascontiguousarray(np.atleast_2d(np.asarray(B, dtype=np.float64)))
    cdef const double[::1] Rv = np.ascontiguousarray(R, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], d = Bv.shape[1], i, j
    cdef long[::1] z = np.full(d, -m, dtype=np.int64)
    cdef double[::1] p = np.empty(n)
    best_P = np.empty(n)
    best_z = np.zeros(d, dtype=np.int64)
    cdef double[::1] bp = best_P
    cdef long[::1] bz = best_z
    cdef double best_val = INFINITY, val, acc
    cdef bint ok, found = False
    while True:
        ok = True
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += z[j] * Bv[i, j]
            p[i] = c[i] + step * acc
            if p[i] < 0.0:
                ok = False
                break
        if ok:
            val = _div(p, Rv, alpha)
            if val < best_val:
                best_val = val
                found = True
                bp[:] = p
                bz[:] = z
        j = d - 1
        while j >= 0 and z[j] == m:
            z[j] = -m
            j -= 1
        if j < 0:
            break
        z[j] += 1
    if not found:
        return None, best_val, None
    return best_P, best_val, best_z
