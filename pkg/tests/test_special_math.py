import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from conftest import REF_MARKET, REF_T
from oracles import quad_tail_moments
from hedgekit.errors import DomainError
from hedgekit.market import MarketState
from hedgekit.special_math import (
    LognormalParams,
    lognormal_params,
    std_normal_cdf,
    std_normal_interval,
    std_normal_quantile,
    tail_moments,
)

finite = st.floats(min_value=-40, max_value=40, allow_nan=False)


def random_draws(n, seed):
    """Parameter sets over sigma in [0.05, 2], T in [0.01, 2], S in [0.1, 100], K in [0.01 S, 10 S]."""
    rng = np.random.default_rng(seed)
    for _ in range(n):
        sigma = rng.uniform(0.05, 2.0)
        horizon = rng.uniform(0.01, 2.0)
        spot = math.exp(rng.uniform(math.log(0.1), math.log(100.0)))
        strike = spot * math.exp(rng.uniform(math.log(0.01), math.log(10.0)))
        mu = rng.uniform(-0.2, 0.3)
        yield lognormal_params(MarketState(spot, mu, sigma, 0.05), horizon), strike


class TestStdNormalCdf:
    def test_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    @given(finite)
    def test_symmetry(self, x):
        assert std_normal_cdf(x) + std_normal_cdf(-x) == pytest.approx(1.0, abs=2e-16)

    def test_quadrature_at_1_96(self):
        pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        left, _ = integrate.quad(pdf, -math.inf, 0.0, epsabs=1e-14, epsrel=1e-13)
        right, _ = integrate.quad(pdf, 0.0, 1.96, epsabs=1e-14, epsrel=1e-13)
        assert abs(std_normal_cdf(1.96) - (left + right)) <= 1e-12

    def test_absolute_accuracy_against_mpmath(self):
        mpmath.mp.dps = 40
        worst = max(abs(std_normal_cdf(x) - float(mpmath.ncdf(x))) for x in np.linspace(-12, 12, 2401))
        assert worst <= 1e-15

    def test_monotone_and_saturating(self):
        xs = np.linspace(-50, 50, 20001)
        values = [std_normal_cdf(x) for x in xs]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[0] == 0.0 and values[-1] == 1.0

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(DomainError):
            std_normal_cdf(bad)

    def test_interval_uses_accurate_tail(self):
        mpmath.mp.dps = 40
        for lo, hi in [(6.0, 6.001), (-6.001, -6.0), (-0.5, 0.25), (3.0, 2.0)]:
            ref = float(mpmath.ncdf(hi) - mpmath.ncdf(lo))
            assert std_normal_interval(lo, hi) == pytest.approx(ref, rel=1e-12)


class TestQuantile:
    def test_matches_scipy_ndtri(self):
        p = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 10001), [1e-300, 1e-20, 0.02425, 0.5, 1 - 1e-12]])
        assert np.max(np.abs(std_normal_quantile(p) - special.ndtri(p))) <= 1e-9

    @given(st.floats(min_value=1e-15, max_value=1 - 1e-15))
    def test_round_trip(self, p):
        assert std_normal_cdf(std_normal_quantile(p)) == pytest.approx(p, rel=1e-12, abs=1e-16)

    def test_scalar_in_scalar_out(self):
        assert isinstance(std_normal_quantile(0.975), float)
        assert std_normal_quantile(0.5) == 0.0

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, math.nan])
    def test_rejects_outside_unit_interval(self, bad):
        with pytest.raises(DomainError):
            std_normal_quantile(bad)


class TestLognormalParams:
    def test_drift_cancels(self):
        sigma = 0.4
        p = lognormal_params(MarketState(1.0, 0.5 * sigma**2, sigma, 0.0), 3.7)
        assert p.a == pytest.approx(0.0, abs=1e-16)

    def test_reference_parameters(self):
        p = lognormal_params(REF_MARKET, REF_T)
        assert p.a == pytest.approx(math.log(20) + (0.1 - 0.5) * (180 / 365), rel=1e-15)
        assert p.b == pytest.approx(math.sqrt(180 / 365), rel=1e-15)

    def test_b_is_total_vol(self):
        assert lognormal_params(MarketState(5.0, 0.0, 2.0, 0.0), 0.25).b == 1.0

    @pytest.mark.parametrize("horizon", [0.0, -1.0, math.inf])
    def test_rejects_bad_horizon(self, horizon):
        with pytest.raises(DomainError):
            lognormal_params(REF_MARKET, horizon)

    def test_market_rejects_nonpositive_inputs(self):
        with pytest.raises(DomainError, match="spot"):
            MarketState(0.0, 0.1, 0.2, 0.0)
        with pytest.raises(DomainError, match="sigma"):
            MarketState(1.0, 0.1, 0.0, 0.0)
        with pytest.raises(DomainError):
            LognormalParams(a=0.0, b=0.0)


class TestTailMoments:
    def test_small_strike_limits(self):
        m = tail_moments(lognormal_params(REF_MARKET, REF_T), 1e-12)
        assert m.a1 == pytest.approx(1.0, abs=1e-15)
        assert m.a3 < 1e-15 and m.a5 < 1e-15

    def test_sum_identities_at_reference_parameters(self):
        p = lognormal_params(REF_MARKET, REF_T)
        for k in (1.0, 10.0, 20.0, 40.0, 400.0):
            m = tail_moments(p, k)
            assert m.a2 + m.a3 == pytest.approx(p.mean, rel=1e-12)
            assert m.a4 + m.a5 == pytest.approx(p.second_moment, rel=1e-12)

    def test_quadrature_at_reference_parameters(self):
        p = lognormal_params(REF_MARKET, REF_T)
        m = tail_moments(p, 20.0)
        for closed, quad in zip(m.as_tuple(), quad_tail_moments(p.a, p.b, 20.0)):
            assert closed == pytest.approx(quad, rel=1e-8)

    def test_corrected_a5_sign_regression(self):
        # The "a + log K" variant of A5 breaks A4 + A5 = E S^2; the implemented one must not.
        p = lognormal_params(REF_MARKET, REF_T)
        good = tail_moments(p, 20.0)
        bad = tail_moments(p, 20.0, corrupt_a5=True)
        assert good.a4 + good.a5 == pytest.approx(p.second_moment, rel=1e-12)
        assert abs(bad.a4 + bad.a5 - p.second_moment) / p.second_moment > 1e-3

    def test_random_draws_sum_identities(self):
        for p, k in random_draws(1000, seed=11):
            m = tail_moments(p, k)
            assert m.a2 + m.a3 == pytest.approx(p.mean, rel=1e-12)
            assert m.a4 + m.a5 == pytest.approx(p.second_moment, rel=1e-12)
            assert 0.0 <= m.a1 <= 1.0 and min(m.as_tuple()) >= 0.0

    def test_random_draws_quadrature(self):
        for p, k in random_draws(200, seed=12):
            m = tail_moments(p, k)
            for closed, quad in zip(m.as_tuple(), quad_tail_moments(p.a, p.b, k)):
                assert abs(closed - quad) / max(closed, 1.0) <= 1e-8

    def test_monotone_in_strike(self):
        p = lognormal_params(MarketState(50.0, 0.05, 0.6, 0.0), 1.3)
        rows = [tail_moments(p, k) for k in np.geomspace(0.5, 5000, 400)]
        for prev, cur in zip(rows, rows[1:]):
            assert cur.a1 <= prev.a1 and cur.a2 <= prev.a2 and cur.a4 <= prev.a4
            assert cur.a3 >= prev.a3 and cur.a5 >= prev.a5

    def test_extreme_strikes_saturate_without_nan(self):
        p = lognormal_params(REF_MARKET, REF_T)
        lo = tail_moments(p, 1e-300)
        hi = tail_moments(p, 1e300)
        assert lo.as_tuple() == pytest.approx((1.0, p.mean, 0.0, p.second_moment, 0.0))
        assert hi.as_tuple() == pytest.approx((0.0, 0.0, p.mean, 0.0, p.second_moment))

    @pytest.mark.parametrize("strike", [0.0, -1.0, math.nan])
    def test_rejects_bad_strike(self, strike):
        with pytest.raises(DomainError):
            tail_moments(LognormalParams(0.0, 1.0), strike)


# Stated for any v in R and b > 0; b is kept >= 1e-3 where the margin, O(b^2), is
# still resolvable in double precision.
ineq_v = st.floats(min_value=-5.0, max_value=5.0)
ineq_b = st.floats(min_value=1e-3, max_value=3.0)


def ratio_bound_holds(v, b):
    up = std_normal_interval(v, v + b)
    down = std_normal_interval(v - b, v)
    return up < math.exp(0.5 * b * b - b * v) * down


def mixture_bound_holds(v, b):
    # Phi(v) (1 + E) < e^{b^2} Phi(v+b) + E Phi(v-b), rearranged so each side is a small difference.
    e = math.exp(0.5 * b * b - b * v)
    lhs = e * std_normal_interval(v - b, v)
    rhs = math.expm1(b * b) * std_normal_cdf(v + b) + std_normal_interval(v, v + b)
    return lhs < rhs


@settings(max_examples=500)
@given(ineq_v, ineq_b)
def test_interval_ratio_bound(v, b):
    assert ratio_bound_holds(v, b)


@settings(max_examples=500)
@given(ineq_v, ineq_b)
def test_cdf_mixture_bound(v, b):
    assert mixture_bound_holds(v, b)


def test_mixture_bound_rearrangement_matches_direct_form():
    for v, b in [(-1.0, 0.5), (0.3, 1.2), (2.0, 2.5)]:
        e = math.exp(0.5 * b * b - b * v)
        direct = (math.exp(b * b) * std_normal_cdf(v + b) + e * std_normal_cdf(v - b)) / (1 + e) - std_normal_cdf(v)
        margin = math.expm1(b * b) * std_normal_cdf(v + b) + std_normal_interval(v, v + b) - e * std_normal_interval(v - b, v)
        assert direct == pytest.approx(margin / (1 + e), rel=1e-9)
