import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphaproj import (
    InfiniteTerm,
    escort,
    highprec_divergence,
    kl_divergence,
    log_convexity_gap,
    relative_alpha_entropy,
    relative_alpha_entropy_normalized,
    renyi_entropy,
    total_variation,
)
from alphaproj.divergence import log_weighted_power_sum
from alphaproj.errors import DimensionMismatch

ALPHA_SET = [0.3, 0.5, 0.7, 1.5, 2.0, 4.0]


@st.composite
def pairs(draw, n_min=2, n_max=6, zeros=False):
    n = draw(st.integers(n_min, n_max))
    lo = 0.0 if zeros else 1e-3
    p = np.array(draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n)))
    q = np.array(draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n)))
    if p.sum() == 0 or q.sum() == 0:
        p, q = p + 1.0, q + 1.0
    return p / p.sum(), q / q.sum()


class TestRelativeAlphaEntropy:
    @pytest.mark.parametrize("a", [0.5, 2.0])
    def test_self_is_zero(self, a):
        P = [0.2, 0.3, 0.5]
        assert relative_alpha_entropy(P, P, a) == pytest.approx(0.0, abs=1e-15)

    def test_not_abs_continuous(self):
        assert relative_alpha_entropy([1.0, 0.0], [0.0, 1.0], 0.5) == math.inf

    def test_infinity_conditions(self):
        # alpha < 1: P not << Q; alpha > 1: disjoint supports only
        assert relative_alpha_entropy([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], 0.5) == math.inf
        assert math.isfinite(relative_alpha_entropy([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], 2.0))
        assert relative_alpha_entropy([0.5, 0.5, 0.0], [0.0, 0.0, 1.0], 2.0) == math.inf
        assert math.isfinite(relative_alpha_entropy([1.0, 0.0, 0.0], [0.5, 0.5, 0.0], 0.5))

    def test_matches_high_precision(self):
        P, Q = [0.5, 0.5], [0.25, 0.75]
        ref = highprec_divergence(P, Q, 0.5)
        assert relative_alpha_entropy(P, Q, 0.5) == pytest.approx(float(ref), rel=1e-12)

    def test_alpha_one_is_kl(self):
        P, Q = [0.3, 0.7], [0.6, 0.4]
        assert relative_alpha_entropy(P, Q, 1.0) == kl_divergence(P, Q)

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            relative_alpha_entropy([0.5, 0.5], [0.5, 0.5], 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            relative_alpha_entropy([0.5, 0.5], [0.2, 0.3, 0.5], 2.0)

    @settings(max_examples=1000)
    @given(pairs(), st.sampled_from(ALPHA_SET))
    def test_forms_agree(self, pq, a):
        p, q = pq
        v1 = relative_alpha_entropy(p, q, a)
        v2 = relative_alpha_entropy_normalized(p, q, a)
        assert v1 == pytest.approx(v2, abs=1e-10)

    @given(pairs(), st.sampled_from(ALPHA_SET), st.sampled_from([0.5, 2.0]))
    def test_scale_extension(self, pq, a, tau):
        p, q = pq
        v = relative_alpha_entropy_normalized(p, q, a)
        assert relative_alpha_entropy_normalized(p, tau * q, a) == pytest.approx(v, abs=1e-12)

    @settings(max_examples=300, deadline=None)
    @given(pairs(zeros=True), st.sampled_from(ALPHA_SET))
    def test_nonnegative_and_definite(self, pq, a):
        p, q = pq
        v = relative_alpha_entropy(p, q, a)
        assert v >= 0
        # near a point mass the value is of order TV^alpha, far below any fixed
        # double threshold, so positivity is checked in extended precision
        if total_variation(p, q) > 1e-6:
            assert highprec_divergence(p, q, a, dps=80) > 0

    def test_point_mass_order(self):
        d = 2e-3
        v = relative_alpha_entropy([1.0, 0.0], [1 - d, d], 4.0)
        assert v == pytest.approx(d ** 4, rel=1e-2)

    @settings(max_examples=50, deadline=None)
    @given(pairs(), st.sampled_from(ALPHA_SET))
    def test_against_high_precision(self, pq, a):
        p, q = pq
        ref = float(highprec_divergence(p, q, a))
        assert relative_alpha_entropy(p, q, a) == pytest.approx(ref, rel=1e-9, abs=1e-13)


class TestKL:
    def test_self(self):
        assert kl_divergence([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_log_two(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_infinite(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_alpha_continuity(self):
        P, Q = [0.3, 0.7], [0.6, 0.4]
        kl = kl_divergence(P, Q)
        for a in (1 - 1e-4, 1 + 1e-4):
            assert abs(relative_alpha_entropy(P, Q, a) - kl) <= 1e-3


class TestRenyi:
    @pytest.mark.parametrize("a", [0.3, 2.0, 4.0])
    def test_uniform(self, a):
        assert renyi_entropy(np.full(5, 0.2), a) == pytest.approx(math.log(5), abs=1e-14)

    def test_degenerate(self):
        assert renyi_entropy([1.0, 0.0, 0.0], 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_value(self):
        assert renyi_entropy([0.25, 0.75], 2) == pytest.approx(-math.log(0.625), abs=1e-12)

    def test_shannon_limit(self):
        P = [0.1, 0.2, 0.7]
        h = renyi_entropy(P, 1.0)
        assert renyi_entropy(P, 1 - 1e-6) == pytest.approx(h, abs=1e-5)

    def test_hartley_limit(self):
        assert renyi_entropy([0.1, 0.2, 0.7, 0.0], 1e-9) == pytest.approx(math.log(3), abs=1e-7)


class TestLogConvexityGap:
    R = [0.2, 0.3, 0.5]

    def test_endpoints(self):
        P, Q = [0.5, 0.25, 0.25], [0.25, 0.5, 0.25]
        assert log_convexity_gap(self.R, P, Q, 0.0, 0.5) == 0.0
        assert log_convexity_gap(self.R, P, Q, 1.0, 2.0) == 0.0

    def test_equal_arguments(self):
        P = [0.5, 0.25, 0.25]
        assert log_convexity_gap(self.R, P, P, 0.4, 0.5) == 0.0

    def test_value(self):
        P, Q = np.array([0.5, 0.25, 0.25]), np.array([0.25, 0.5, 0.25])
        gap = log_convexity_gap(self.R, P, Q, 0.5, 0.5)
        m = np.sqrt(P * Q)
        m /= m.sum()
        pe, qe = escort(P, 0.5).weights, escort(Q, 0.5).weights
        direct = (0.5 * relative_alpha_entropy(self.R, P, 0.5) + 0.5 * relative_alpha_entropy(self.R, Q, 0.5)
                  - relative_alpha_entropy(self.R, m, 0.5) + math.log(np.sum(np.sqrt(pe * qe))))
        assert gap == pytest.approx(direct, abs=1e-15)
        assert gap >= 0

    def test_infinite_term(self):
        with pytest.raises(InfiniteTerm):
            log_convexity_gap([0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.0, 0.25, 0.75], 0.5, 0.5)

    @settings(max_examples=300)
    @given(st.integers(2, 6).flatmap(lambda n: st.tuples(*[st.lists(st.floats(1e-3, 1), min_size=n, max_size=n)] * 3)),
           st.floats(0, 1), st.sampled_from([0.3, 0.7, 1.5, 4.0]))
    def test_sign(self, rpq, t, a):
        r, p, q = (np.array(v) / sum(v) for v in rpq)
        gap = log_convexity_gap(r, p, q, t, a)
        if a < 1:
            assert gap >= -1e-10
        else:
            assert gap <= 1e-10


def test_log_weighted_power_sum_conventions():
    assert log_weighted_power_sum([0.0, 1.0], [0.0, 0.5], -1.0) == pytest.approx(math.log(2.0))
    assert log_weighted_power_sum([1.0, 1.0], [0.0, 0.5], -1.0) == math.inf
    assert log_weighted_power_sum([1.0, 1.0], [0.0, 0.5], 2.0) == pytest.approx(math.log(0.25))
