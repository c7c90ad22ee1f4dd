"""Finite-alphabet probability measures and the generalized log/exp.

Measures are immutable numpy-backed objects.  Every operation here also
accepts a plain array-like in place of a :class:`ProbMeasure`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, SingularPair

SUM_TOL = 1e-12
RENORMALIZE_TOL = 1e-9
# rounding noise from solvers/CSV; anything more negative is rejected
NEG_CLAMP = 1e-12


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: Optional[tuple] = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.size!r}")
        if self.labels is not None:
            if len(self.labels) != self.size:
                raise DimensionMismatch("number of labels differs from alphabet size")
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))


class ProbMeasure:
    """A probability vector on a finite alphabet.

    Inputs whose total deviates from 1 by at most ``1e-9`` are rescaled;
    larger deviations raise ``ValueError``.
    """

    __slots__ = ("_w", "alphabet")

    def __init__(self, weights, alphabet: Optional[Alphabet] = None):
        w = np.array(weights, dtype=float).ravel()
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < -NEG_CLAMP):
            raise ValueError(f"negative weight {w.min()!r}")
        w = np.where(w < 0, 0.0, w)
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        if total != 1.0:
            w = w / total
        if alphabet is None:
            alphabet = Alphabet(w.size)
        elif alphabet.size != w.size:
            raise DimensionMismatch(f"{w.size} weights for an alphabet of size {alphabet.size}")
        w.setflags(write=False)
        self._w = w
        self.alphabet = alphabet

    @classmethod
    def from_unnormalized(cls, weights, alphabet=None) -> "ProbMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), alphabet)

    @classmethod
    def uniform(cls, n: int) -> "ProbMeasure":
        return cls(np.full(n, 1.0 / n))

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def size(self) -> int:
        return self._w.size

    def support(self) -> frozenset:
        return frozenset(np.flatnonzero(self._w > 0).tolist())

    def support_mask(self) -> np.ndarray:
        return self._w > 0

    def __array__(self, dtype=None, copy=None):
        return self._w if dtype is None else self._w.astype(dtype)

    def __len__(self):
        return self._w.size

    def __getitem__(self, i):
        return self._w[i]

    def __eq__(self, other):
        if not isinstance(other, ProbMeasure):
            return NotImplemented
        return self._w.shape == other._w.shape and bool(np.all(self._w == other._w))

    def __hash__(self):
        return hash(self._w.tobytes())

    def __repr__(self):
        return f"ProbMeasure({np.array2string(self._w, precision=6)})"

    def tolist(self) -> list:
        return self._w.tolist()


def as_weights(P) -> np.ndarray:
    """Return the weight vector of ``P`` (measure or array-like) as float array."""
    if isinstance(P, ProbMeasure):
        return P.weights
    return np.asarray(P, dtype=float)


def as_measure(P) -> ProbMeasure:
    return P if isinstance(P, ProbMeasure) else ProbMeasure(P)


def log_power(w: np.ndarray, exponent: float) -> np.ndarray:
    """Elementwise ``log(w**exponent)`` with the limits at ``w == 0``.

    Gives ``-inf`` for positive exponents and ``+inf`` for negative ones;
    ``0`` when the exponent is zero.
    """
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    if exponent == 0:
        return np.zeros_like(lw)
    return exponent * lw


def power(w: np.ndarray, exponent: float) -> np.ndarray:
    """``w**exponent`` evaluated through the log domain (0**neg = inf)."""
    with np.errstate(over="ignore"):
        return np.exp(log_power(w, exponent))


def total_variation(P, Q) -> float:
    return 0.5 * float(np.abs(as_weights(P) - as_weights(Q)).sum())


def escort(P, alpha: float) -> ProbMeasure:
    """Escort measure, proportional to ``P(x)**alpha``."""
    w = as_weights(P)
    lp = log_power(w, alpha)
    lp = np.where(w > 0, lp, -np.inf)
    m = lp.max()
    if not np.isfinite(m):
        raise ValueError("escort of a measure with empty support")
    u = np.exp(lp - m)
    return ProbMeasure(u / u.sum())


def alpha_norm(P, alpha: float) -> float:
    """``(sum_x P(x)**alpha) ** (1/alpha)``."""
    w = as_weights(P)
    if alpha == 1:
        return float(w.sum())
    lp = log_power(w[w > 0], alpha)
    m = lp.max()
    return float(np.exp((m + np.log(np.exp(lp - m).sum())) / alpha))


def ln_alpha(u, alpha: float):
    """Generalized logarithm ``(u**(1-alpha) - 1) / (1 - alpha)``.

    ``u = 0`` is allowed and returns the limit: ``-1/(1-alpha)`` when
    ``alpha < 1``, ``-inf`` otherwise.  Works elementwise on arrays.
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("ln_alpha is defined on [0, inf]")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if alpha == 1:
            out = np.log(arr)
        else:
            out = np.expm1(log_power(arr, 1.0 - alpha)) / (1.0 - alpha)
    return out if np.ndim(out) else float(out)


def e_alpha(u, alpha: float):
    """Generalized exponential ``max(1 + (1-alpha) u, 0) ** (1/(1-alpha))``."""
    arr = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if alpha == 1:
            out = np.exp(arr)
        else:
            k = 1.0 - alpha
            # log1p keeps e_alpha(ln_alpha(u)) == u accurate near u = 1
            inner = k * arr
            base_pos = inner > -1.0
            logs = np.where(base_pos, np.log1p(np.where(base_pos, inner, 0.0)) / k, 0.0)
            out = np.where(base_pos, np.exp(logs), 0.0 if k > 0 else np.inf)
    return out if np.ndim(out) else float(out)


def _check_pair(P, Q):
    p, q = as_weights(P), as_weights(Q)
    if p.shape != q.shape:
        raise DimensionMismatch(f"measures of sizes {p.size} and {q.size}")
    return p, q


def geometric_mixture(P, Q, t: float) -> ProbMeasure:
    """Normalized ``P**t * Q**(1-t)``."""
    p, q = _check_pair(P, Q)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if not np.any((p > 0) & (q > 0)):
        raise SingularPair("supports of P and Q are disjoint")
    if t == 1.0:
        return as_measure(P)
    if t == 0.0:
        return as_measure(Q)
    lw = log_power(p, t) + log_power(q, 1.0 - t)
    m = lw.max()
    u = np.exp(lw - m)
    return ProbMeasure(u / u.sum())


def ln_alpha_mixture(P, Q, t: float, alpha: float) -> ProbMeasure:
    """Normalized ``[t P**(alpha-1) + (1-t) Q**(alpha-1)] ** (1/(alpha-1))``."""
    p, q = _check_pair(P, Q)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if alpha <= 1 and not np.any((p > 0) & (q > 0)):
        raise SingularPair("supports of P and Q are disjoint")
    if t == 1.0:
        return as_measure(P)
    if t == 0.0:
        return as_measure(Q)
    if alpha == 1:
        return geometric_mixture(P, Q, t)
    # log-sum-exp of the two weighted powers, then rescale by 1/(alpha-1)
    a = np.log(t) + log_power(p, alpha - 1.0)
    b = np.log1p(-t) + log_power(q, alpha - 1.0)
    with np.errstate(invalid="ignore"):
        lse = np.logaddexp(a, b)
    lw = lse / (alpha - 1.0)
    # alpha < 1: a zero in either argument makes the bracket infinite, weight 0
    lw = np.where(np.isnan(lw), -np.inf, lw)
    m = lw.max()
    if not np.isfinite(m):
        raise SingularPair("mixture has empty support")
    u = np.exp(lw - m)
    return ProbMeasure(u / u.sum())
