"""Relative alpha-entropy and related information quantities.

Infinite divergences are returned as ``math.inf`` rather than raised, so a
minimizer can compare candidates uniformly.  Terms of the form
``0 * (+-inf)`` inside sums count as zero.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .errors import InfiniteTerm
from .measures import _check_pair, as_weights, escort, geometric_mixture, log_power

__all__ = [
    "log_weighted_power_sum",
    "relative_alpha_entropy",
    "relative_alpha_entropy_normalized",
    "kl_divergence",
    "renyi_entropy",
    "log_convexity_gap",
]


def log_weighted_power_sum(weight, base, exponent: float) -> float:
    """``log sum_x weight(x) * base(x)**exponent`` with the zero conventions.

    Symbols with zero weight are dropped.  A zero base contributes nothing for
    a positive exponent and makes the sum ``+inf`` for a negative one.
    """
    weight = np.asarray(weight, dtype=float)
    base = np.asarray(base, dtype=float)
    keep = weight > 0
    w, b = weight[keep], base[keep]
    if w.size == 0:
        return -math.inf
    terms = np.log(w) + log_power(b, exponent)
    if np.any(terms == math.inf):
        return math.inf
    return float(logsumexp(terms))


def relative_alpha_entropy(P, Q, alpha: float) -> float:
    """Relative alpha-entropy of ``P`` with respect to ``Q`` (expanded form).

    ``alpha == 1`` dispatches to :func:`kl_divergence`.

    Returns ``inf`` when ``alpha < 1`` and ``P`` is not absolutely continuous
    w.r.t. ``Q``, or when ``alpha > 1`` and the supports are disjoint.
    """
    p, q = _check_pair(P, Q)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha == 1:
        return kl_divergence(p, q)
    cross = log_weighted_power_sum(p, q, alpha - 1.0)
    if alpha < 1 and cross == math.inf:
        return math.inf
    if alpha > 1 and cross == -math.inf:
        return math.inf
    self_p = log_weighted_power_sum(np.ones_like(p), p, alpha)
    self_q = log_weighted_power_sum(np.ones_like(q), q, alpha)
    val = alpha / (1.0 - alpha) * cross - self_p / (1.0 - alpha) + self_q
    return max(val, 0.0)


def relative_alpha_entropy_normalized(P, Q, alpha: float) -> float:
    """Same quantity through ``(a/(1-a)) log sum (P/|P|) (Q/|Q|)**(a-1)``.

    Both arguments may be arbitrary positive measures; only their directions
    matter.
    """
    p, q = _check_pair(P, Q)
    if alpha == 1:
        return kl_divergence(p / p.sum(), q / q.sum())
    lnp = log_weighted_power_sum(np.ones_like(p), p, alpha) / alpha
    lnq = log_weighted_power_sum(np.ones_like(q), q, alpha) / alpha
    with np.errstate(divide="ignore"):
        pn = np.exp(np.log(p) - lnp)
        qn = np.exp(np.log(q) - lnq)
    s = log_weighted_power_sum(pn, qn, alpha - 1.0)
    if (alpha < 1 and s == math.inf) or (alpha > 1 and s == -math.inf):
        return math.inf
    return max(alpha / (1.0 - alpha) * s, 0.0)


def kl_divergence(P, Q) -> float:
    """Kullback-Leibler divergence ``sum P log(P/Q)``; ``inf`` unless P << Q."""
    p, q = _check_pair(P, Q)
    m = p > 0
    if np.any(q[m] <= 0):
        return math.inf
    return max(float(np.sum(p[m] * (np.log(p[m]) - np.log(q[m])))), 0.0)


def renyi_entropy(P, alpha: float) -> float:
    """Renyi entropy ``log(sum P**alpha) / (1 - alpha)``; Shannon at ``alpha == 1``."""
    p = as_weights(P)
    if alpha == 1:
        m = p > 0
        return float(-np.sum(p[m] * np.log(p[m])))
    return log_weighted_power_sum(np.ones_like(p), p, alpha) / (1.0 - alpha)


def log_convexity_gap(R, P, Q, t: float, alpha: float) -> float:
    """Slack in the log-convexity inequality for relative alpha-entropy.

    Returns ``t I(R,P) + (1-t) I(R,Q) - I(R, mix) + log sum P'^t Q'^(1-t)``
    where ``mix`` is the normalized geometric mixture of ``P`` and ``Q`` and
    primes denote escorts.  Nonnegative for ``alpha < 1``, nonpositive for
    ``alpha > 1``.
    """
    p, q = _check_pair(P, Q)
    r = as_weights(R)
    if t in (0.0, 1.0) or np.array_equal(p, q):
        # the mixture is one of the endpoints and the escort sum is exactly 1
        if math.isinf(relative_alpha_entropy(r, p if t == 1.0 else q, alpha)):
            raise InfiniteTerm("divergence term is infinite")
        return 0.0
    mix = geometric_mixture(p, q, t)
    d_p = relative_alpha_entropy(r, p, alpha)
    d_q = relative_alpha_entropy(r, q, alpha)
    d_m = relative_alpha_entropy(r, mix, alpha)
    if any(math.isinf(d) for d in (d_p, d_q, d_m)):
        raise InfiniteTerm("a divergence term of the log-convexity inequality is infinite")
    pe, qe = escort(p, alpha).weights, escort(q, alpha).weights
    holder = logsumexp(log_power(pe[pe > 0], t) + log_power(qe[pe > 0], 1.0 - t))
    return t * d_p + (1.0 - t) * d_q - d_m + float(holder)
