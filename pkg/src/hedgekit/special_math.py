"""
Standard-normal distribution function and truncated lognormal moments.

Every closed form in :mod:`hedgekit.pricing` reduces to the five tail
integrals of the lognormal terminal-price density

    A1 = P(S >= K)          A2 = E[S; S >= K]      A3 = E[S; S < K]
    A4 = E[S^2; S >= K]     A5 = E[S^2; S < K]

with ``log S ~ N(a, b)``. They are evaluated here from the standard normal
CDF, which is computed through the complementary error function so that both
tails keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .market import MarketState

_SQRT1_2 = math.sqrt(0.5)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to ~1e-16 absolute over the real line.

    Uses ``Phi(x) = erfc(-x / sqrt(2)) / 2``; for large ``|x|`` the result
    saturates smoothly to 0 or 1.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"std_normal_cdf requires a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x * _SQRT1_2)


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def std_normal_interval(lo: float, hi: float) -> float:
    """``Phi(hi) - Phi(lo)``, taken from whichever tail keeps it accurate."""
    if hi < lo:
        return -std_normal_interval(hi, lo)
    if lo >= 0.0:
        return std_normal_cdf(-lo) - std_normal_cdf(-hi)
    return std_normal_cdf(hi) - std_normal_cdf(lo)


# Acklam's rational approximation for the normal quantile (rel. error 1.15e-9),
# followed by one Halley step against erfc.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` for ``p`` in the open interval (0, 1).

    Accepts a scalar or an array; returns the same shape. Absolute error is
    below 1e-9 (typically ~1e-15 after the refinement step).
    """
    p_arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("std_normal_quantile requires 0 < p < 1")

    # Work on the lower half; 1 - p is exact for p >= 0.5.
    upper = p_arr > 0.5
    q = np.where(upper, 1.0 - p_arr, p_arr)
    x = np.empty_like(q)

    tail = q < _P_LOW
    if np.any(tail):
        t = np.sqrt(-2.0 * np.log(q[tail]))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        x[tail] = num / den
    body = ~tail
    if np.any(body):
        u = q[body] - 0.5
        r = u * u
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[body] = num / den

    err = 0.5 * special.erfc(-x * _SQRT1_2) - q
    step = err * _SQRT_2PI * np.exp(0.5 * x * x)
    x = x - step / (1.0 + 0.5 * x * step)
    x = np.where(upper, -x, x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class LognormalParams:
    """Parameters of ``log S(t+T) ~ N(a, b)``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.a):
            raise DomainError(f"a must be finite, got {self.a!r}")
        if not (math.isfinite(self.b) and self.b > 0.0):
            raise DomainError(f"b must be finite and > 0, got {self.b!r}")

    @property
    def mean(self) -> float:
        """E S(t+T) = exp(a + b^2/2)."""
        return math.exp(self.a + 0.5 * self.b * self.b)

    @property
    def second_moment(self) -> float:
        """E S(t+T)^2 = exp(2(a + b^2))."""
        return math.exp(2.0 * (self.a + self.b * self.b))

    @property
    def variance(self) -> float:
        """Var S(t+T) = exp(2a + b^2)(exp(b^2) - 1), free of cancellation."""
        b2 = self.b * self.b
        return math.exp(2.0 * self.a + b2) * math.expm1(b2)


def lognormal_params(market: MarketState, horizon: float) -> LognormalParams:
    """Terminal log-price law after ``horizon`` years of GBM with drift ``mu``."""
    horizon = float(horizon)
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise DomainError(f"horizon must be finite and > 0, got {horizon!r}")
    sigma = market.sigma
    a = math.log(market.spot) + (market.mu - 0.5 * sigma * sigma) * horizon
    b = sigma * math.sqrt(horizon)
    return LognormalParams(a=a, b=b)


@dataclass(frozen=True)
class TailMoments:
    """A1..A5 evaluated at one strike."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    strike: float
    params: LognormalParams

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4, self.a5)


def tail_moments(params: LognormalParams, strike: float, *, corrupt_a5: bool = False) -> TailMoments:
    """Closed-form truncated moments of the lognormal law at ``strike``.

    With ``d = (a - log K) / b``::

        A1 = Phi(d)
        A2 = exp(a + b^2/2) Phi(d + b)      A3 = exp(a + b^2/2) Phi(-(d + b))
        A4 = exp(2(a + b^2)) Phi(d + 2b)    A5 = exp(2(a + b^2)) Phi(-(d + 2b))

    The lower-tail terms use ``Phi(-x)`` rather than ``1 - Phi(x)`` so they
    keep relative precision deep out of the money.

    ``corrupt_a5`` is a negative-control switch for verification runs: it
    evaluates A5 with ``(a + log K) / b`` in place of ``d`` which breaks the
    identity ``A4 + A5 = E S^2``. Never set it for real pricing.
    """
    strike = float(strike)
    if not (math.isfinite(strike) and strike > 0.0):
        raise DomainError(f"strike must be finite and > 0, got {strike!r}")
    a, b = params.a, params.b
    log_k = math.log(strike)
    d = (a - log_k) / b
    m1 = params.mean
    m2 = params.second_moment
    a1 = std_normal_cdf(d)
    a2 = m1 * std_normal_cdf(d + b)
    a3 = m1 * std_normal_cdf(-(d + b))
    a4 = m2 * std_normal_cdf(d + 2.0 * b)
    if corrupt_a5:
        a5 = m2 * (1.0 - std_normal_cdf(2.0 * b + (a + log_k) / b))
    else:
        a5 = m2 * std_normal_cdf(-(d + 2.0 * b))
    return TailMoments(a1=a1, a2=a2, a3=a3, a4=a4, a5=a5, strike=strike, params=params)
