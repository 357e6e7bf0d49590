"""Rolling drift/volatility estimates from daily closes, strike rule and fee floor."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError, InsufficientHistoryError

DEFAULT_WINDOW = 120
DEFAULT_BETA = 1.1
DEFAULT_GAMMA = 20.0
DEFAULT_FEE_FLOOR = 0.03


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes of one asset, ordered by strictly increasing date."""

    ticker: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self) -> None:
        closes = np.array(self.closes, dtype=float)
        closes.setflags(write=False)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "dates", tuple(self.dates))
        if closes.ndim != 1 or len(closes) != len(self.dates):
            raise DataError(f"{self.ticker}: {len(self.dates)} dates but {closes.size} closes")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0.0):
            bad = int(np.flatnonzero(~(np.isfinite(closes) & (closes > 0.0)))[0])
            raise DataError(f"{self.ticker}: close on {self.dates[bad]} must be finite and > 0")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DataError(f"{self.ticker}: dates not strictly increasing at {self.dates[i]}")

    def __len__(self) -> int:
        return len(self.closes)

    def scaled(self, factor: float) -> "PriceSeries":
        return PriceSeries(self.ticker, self.dates, self.closes * factor)


@dataclass(frozen=True)
class RollingEstimate:
    """Per-day estimates over the ``window`` log-returns ending at one close."""

    mu_hat: float
    sigma_hat: float
    mean_log_return: float
    window: int


def log_returns(closes: Sequence[float] | np.ndarray) -> np.ndarray:
    closes = np.asarray(closes, dtype=float)
    if np.any(closes <= 0.0):
        raise DomainError("log returns need strictly positive prices")
    return np.log(closes[1:] / closes[:-1])


def rolling_estimates(series: PriceSeries, t: int, window: int = DEFAULT_WINDOW) -> RollingEstimate:
    """Estimate drift and volatility from the ``window`` returns ending at row ``t``.

    Uses ``R_j = log(S[t-j+1] / S[t-j])`` for ``j = 1..window``, the sample
    standard deviation with ``window - 1`` divisor, and
    ``mu_hat = mean(R) + sigma_hat**2 / 2``. Rows are 0-based, so ``t`` must be
    at least ``window``. Everything is per observation day.
    """
    if window < 2:
        raise DomainError(f"window must be >= 2, got {window}")
    if t < window or t >= len(series):
        raise InsufficientHistoryError(
            f"{series.ticker}: row {t} needs {window} prior returns within {len(series)} closes"
        )
    returns = log_returns(series.closes[t - window : t + 1])
    mean = float(np.mean(returns))
    sigma = float(np.std(returns, ddof=1))
    return RollingEstimate(
        mu_hat=mean + 0.5 * sigma * sigma,
        sigma_hat=sigma,
        mean_log_return=mean,
        window=window,
    )


def annualize(estimate: RollingEstimate, day_count_base: float = 365.0) -> tuple[float, float]:
    """Per-day ``(mu_hat, sigma_hat)`` scaled to per-year ``(mu, sigma)``."""
    return estimate.mu_hat * day_count_base, estimate.sigma_hat * math.sqrt(day_count_base)


def strike_rule(
    spot: float,
    mu_hat: float,
    sigma_hat: float,
    maturity: float,
    beta: float = DEFAULT_BETA,
    gamma: float = DEFAULT_GAMMA,
) -> float:
    """``K = S exp(mu T / (beta + gamma sigma))``: drift-tilted strike, damped by volatility."""
    if not spot > 0.0:
        raise DomainError(f"spot must be > 0, got {spot!r}")
    denom = beta + gamma * sigma_hat
    if not denom > 0.0:
        raise DomainError(f"beta + gamma*sigma must be > 0, got {denom!r}")
    return spot * math.exp(mu_hat * maturity / denom)


def apply_fee_floor(price: float, spot: float, floor_fraction: float = DEFAULT_FEE_FLOOR) -> float:
    if not spot > 0.0:
        raise DomainError(f"spot must be > 0, got {spot!r}")
    if not floor_fraction >= 0.0:
        raise DomainError(f"floor_fraction must be >= 0, got {floor_fraction!r}")
    return max(price, floor_fraction * spot)
