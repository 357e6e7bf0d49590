"""
European call pricing under lognormal terminal prices.

Three engines share one set of inputs:

* :func:`price_black_scholes` -- the risk-neutral closed form (ignores ``mu``);
* :func:`price_expectations` -- discounted real-world expected payoff;
* :func:`price_mv` -- the mean-variance hedger. The writer holds ``h`` units
  of stock per call, ``F = -C + h S``, with ``h`` minimising ``Var F(t+T)``
  for a single, never-rebalanced position. The premium is
  ``C_MV = h S - exp(-rT) E F(t+T)`` and may be negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConsistencyError, DomainError
from .market import ContractTerms, MarketState
from .special_math import LognormalParams, TailMoments, lognormal_params, std_normal_cdf, tail_moments

__all__ = [
    "ContractTerms",
    "HedgeQuote",
    "MarketState",
    "hedge_ratio",
    "hedge_ratio_five_moment",
    "portfolio_moments",
    "price_black_scholes",
    "price_expectations",
    "price_expectations_closed",
    "price_mv",
    "quote_mv",
    "stddev_unhedged",
]

MIN_TOTAL_VOL = 1e-6
# Variance clamp band, relative to E F^2 (the size of the cancelled terms).
VARIANCE_CLAMP = 1e-12


@dataclass(frozen=True)
class HedgeQuote:
    hedge_ratio: float
    price_mv: float
    expected_terminal: float
    variance: float
    stddev: float


def _params(market: MarketState, contract: ContractTerms) -> LognormalParams:
    total_vol = market.sigma * math.sqrt(contract.maturity)
    if total_vol < MIN_TOTAL_VOL:
        raise DomainError(f"sigma*sqrt(T) = {total_vol:.3g} is below {MIN_TOTAL_VOL:g}; degenerate pricing refused")
    return lognormal_params(market, contract.maturity)


def _moments(market: MarketState, contract: ContractTerms) -> TailMoments:
    return tail_moments(_params(market, contract), contract.strike)


def _clamp_variance(value: float, scale: float, what: str) -> float:
    if not math.isfinite(value):
        raise ConsistencyError(f"{what} is not finite ({value!r})")
    if value >= 0.0:
        return value
    if value > -VARIANCE_CLAMP * max(scale, 1.0):
        return 0.0
    raise ConsistencyError(f"{what} is materially negative ({value!r})")


def price_black_scholes(market: MarketState, contract: ContractTerms) -> float:
    """Black-Scholes call value; ``market.mu`` plays no role."""
    s, k, t, r = market.spot, contract.strike, contract.maturity, market.rate
    vol = market.sigma * math.sqrt(t)
    if vol < MIN_TOTAL_VOL:
        raise DomainError(f"sigma*sqrt(T) = {vol:.3g} is below {MIN_TOTAL_VOL:g}; degenerate pricing refused")
    alpha = (math.log(s / k) + (r + 0.5 * market.sigma**2) * t) / vol
    beta = alpha - vol
    return s * std_normal_cdf(alpha) - k * math.exp(-r * t) * std_normal_cdf(beta)


def price_expectations_closed(market: MarketState, contract: ContractTerms) -> float:
    """Discounted expected payoff in the ``Phi(alpha), Phi(beta)`` form.

    ``S exp((mu - r)T) Phi(alpha) - K exp(-rT) Phi(beta)``; reduces to
    Black-Scholes when ``mu == r``.
    """
    s, k, t = market.spot, contract.strike, contract.maturity
    vol = market.sigma * math.sqrt(t)
    if vol < MIN_TOTAL_VOL:
        raise DomainError(f"sigma*sqrt(T) = {vol:.3g} is below {MIN_TOTAL_VOL:g}; degenerate pricing refused")
    alpha = (math.log(s / k) + (market.mu + 0.5 * market.sigma**2) * t) / vol
    beta = alpha - vol
    return (s * math.exp((market.mu - market.rate) * t) * std_normal_cdf(alpha)
            - k * math.exp(-market.rate * t) * std_normal_cdf(beta))


def price_expectations(market: MarketState, contract: ContractTerms) -> float:
    """``exp(-rT) (A2 - K A1)``: discounted expected payoff under drift ``mu``."""
    m = _moments(market, contract)
    return math.exp(-market.rate * contract.maturity) * (m.a2 - contract.strike * m.a1)


def _hedge_ratio_from(m: TailMoments) -> float:
    # h = Cov(payoff, S) / Var(S). In the money, 1 - h = Cov(min(S, K), S) / Var(S)
    # is evaluated instead, from lower-tail terms only, so h stays below 1.
    p = m.params
    k = m.strike
    var = p.variance
    h = (m.a4 - k * m.a2 + p.mean * (k * m.a1 - m.a2)) / var
    if h > 0.5:
        upper_a1 = std_normal_cdf((math.log(k) - p.a) / p.b)  # 1 - A1
        cov_low = m.a5 - (k + p.mean) * m.a3 + k * p.mean * upper_a1
        h = 1.0 - cov_low / var
    return h


def hedge_ratio(market: MarketState, contract: ContractTerms) -> float:
    """Variance-minimising stock holding per written call.

    ``h = (A4 - K A2 + E[S] (K A1 - A2)) / (exp(2a + b^2)(exp(b^2) - 1))``.
    Lies strictly inside (0, 1) for ``sigma > 0`` and tends to 1 as ``K -> 0``.
    """
    return _hedge_ratio_from(_moments(market, contract))


def hedge_ratio_five_moment(market: MarketState, contract: ContractTerms) -> float:
    """Same minimiser written purely in A1..A5 (cross-check for :func:`hedge_ratio`)."""
    m = _moments(market, contract)
    k = contract.strike
    s1 = m.a2 + m.a3
    return (m.a4 - k * m.a2 + s1 * (k * m.a1 - m.a2)) / (m.a4 + m.a5 - s1 * s1)


def _portfolio_moments_from(m: TailMoments, h: float) -> tuple[float, float]:
    k = m.strike
    expected = h * (m.a2 + m.a3) - m.a2 + k * m.a1
    second = (h - 1.0) ** 2 * m.a4 + 2.0 * k * (h - 1.0) * m.a2 + k * k * m.a1 + h * h * m.a5
    variance = _clamp_variance(second - expected * expected, second, "portfolio variance")
    return expected, variance


def portfolio_moments(market: MarketState, contract: ContractTerms, h: float) -> tuple[float, float]:
    """Mean and variance of ``F(t+T) = -max(S - K, 0) + h S`` at maturity."""
    h = float(h)
    if not math.isfinite(h):
        raise DomainError(f"h must be finite, got {h!r}")
    return _portfolio_moments_from(_moments(market, contract), h)


def quote_mv(market: MarketState, contract: ContractTerms) -> HedgeQuote:
    """Full mean-variance quote: ``h``, premium and terminal portfolio moments."""
    m = _moments(market, contract)
    h = _hedge_ratio_from(m)
    expected, variance = _portfolio_moments_from(m, h)
    price = h * market.spot - math.exp(-market.rate * contract.maturity) * expected
    return HedgeQuote(
        hedge_ratio=h,
        price_mv=price,
        expected_terminal=expected,
        variance=variance,
        stddev=math.sqrt(variance),
    )


def price_mv(market: MarketState, contract: ContractTerms) -> float:
    """Mean-variance hedger ``h S - exp(-rT) [h(A2 + A3) - A2 + K A1]``; not floored."""
    return quote_mv(market, contract).price_mv


def stddev_unhedged(market: MarketState, contract: ContractTerms) -> float:
    """Terminal stddev of the call payoff alone (writer holding only cash)."""
    m = _moments(market, contract)
    k = contract.strike
    second = m.a4 - 2.0 * k * m.a2 + k * k * m.a1
    variance = m.a1 * (1.0 - m.a1) * k * k + 2.0 * m.a2 * k * (m.a1 - 1.0) + m.a4 - m.a2 * m.a2
    return math.sqrt(_clamp_variance(variance, second, "payoff variance"))
