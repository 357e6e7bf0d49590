"""
Seeded Monte Carlo for GBM terminal prices and synthetic daily series.

Used as the independent check on every closed form: terminal prices are
drawn straight from the lognormal law, never through :mod:`hedgekit.special_math`
tail integrals. Normals come from PCG64 uniforms pushed through the inverse
CDF, in fixed-size chunks with their own spawn keys, so a given
``(seed, paths)`` always produces the same draws.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DomainError
from .estimators import PriceSeries
from .special_math import std_normal_quantile

GENERATOR_NAME = "numpy PCG64 / SeedSequence spawn-key chunks / inverse-CDF normals"
CHUNK_SIZE = 1 << 20


@dataclass(frozen=True)
class GbmSpec:
    spot: float
    mu: float
    sigma: float
    horizon: float
    seed: int = 0
    paths: int = 100_000

    def __post_init__(self) -> None:
        if self.paths < 1:
            raise DomainError(f"paths must be >= 1, got {self.paths}")
        for name in ("spot", "sigma", "horizon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float

    def deviation(self, value: float) -> float:
        """Distance of ``value`` from the estimate in standard errors."""
        if self.stderr == 0.0:
            return 0.0 if value == self.mean else math.inf
        return abs(value - self.mean) / self.stderr


def _chunk_normals(seed: int, index: int, size: int) -> np.ndarray:
    bits = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,)))
    raw = bits.random_raw(size) >> np.uint64(11)
    u = (raw.astype(np.float64) + 0.5) * 2.0**-53
    return std_normal_quantile(u)


def iter_standard_normals(seed: int, count: int, chunk_size: int = CHUNK_SIZE) -> Iterator[np.ndarray]:
    """Yield ``count`` standard normals in chunks; chunk ``i`` depends only on ``(seed, i)``."""
    index = 0
    remaining = count
    while remaining > 0:
        size = min(chunk_size, remaining)
        yield _chunk_normals(seed, index, size)
        remaining -= size
        index += 1


def standard_normals(seed: int, count: int) -> np.ndarray:
    if count == 0:
        return np.empty(0)
    return np.concatenate(list(iter_standard_normals(seed, count)))


def sample_terminal(spec: GbmSpec) -> np.ndarray:
    """``S exp((mu - sigma^2/2) T + sigma sqrt(T) Z)`` for ``spec.paths`` draws of Z."""
    z = standard_normals(spec.seed, spec.paths)
    drift = (spec.mu - 0.5 * spec.sigma**2) * spec.horizon
    return spec.spot * np.exp(drift + spec.sigma * math.sqrt(spec.horizon) * z)


def mean_estimate(values: np.ndarray) -> McEstimate:
    n = values.size
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    return McEstimate(mean, stderr)


def variance_estimate(values: np.ndarray) -> McEstimate:
    """Sample variance with its large-sample standard error sqrt((m4 - s^4) / N)."""
    n = values.size
    centered = values - np.mean(values)
    sq = centered * centered
    var = float(np.sum(sq)) / (n - 1)
    m4 = float(np.mean(sq * sq))
    return McEstimate(var, math.sqrt(max(m4 - var * var, 0.0) / n))


def stddev_estimate(values: np.ndarray) -> McEstimate:
    v = variance_estimate(values)
    s = math.sqrt(v.mean)
    return McEstimate(s, v.stderr / (2.0 * s) if s > 0.0 else 0.0)


@dataclass(frozen=True)
class McTailMoments:
    a1: McEstimate
    a2: McEstimate
    a3: McEstimate
    a4: McEstimate
    a5: McEstimate

    def as_tuple(self) -> tuple[McEstimate, ...]:
        return (self.a1, self.a2, self.a3, self.a4, self.a5)


def mc_tail_moments(spec: GbmSpec, strike: float, samples: np.ndarray | None = None) -> McTailMoments:
    """Indicator-weighted sample means of 1, x, x^2 above and below ``strike``."""
    if not strike > 0.0:
        raise DomainError(f"strike must be > 0, got {strike!r}")
    x = sample_terminal(spec) if samples is None else samples
    above = x >= strike
    x_up = np.where(above, x, 0.0)
    x_dn = x - x_up
    return McTailMoments(
        a1=mean_estimate(above.astype(float)),
        a2=mean_estimate(x_up),
        a3=mean_estimate(x_dn),
        a4=mean_estimate(x_up * x_up),
        a5=mean_estimate(x_dn * x_dn),
    )


@dataclass(frozen=True)
class McPortfolio:
    """Empirical counterparts of the pricing-module closed forms at one strike."""

    discounted_payoff: McEstimate  # exp(-rT) E max(S_T - K, 0)
    payoff_variance: McEstimate
    payoff_stddev: McEstimate
    expected_terminal: McEstimate  # E F(t+T) with F = -payoff + h S_T
    terminal_variance: McEstimate
    discounted_terminal: McEstimate  # exp(-rT) E F(t+T)


def mc_portfolio(spec: GbmSpec, strike: float, rate: float, h: float,
                 samples: np.ndarray | None = None) -> McPortfolio:
    x = sample_terminal(spec) if samples is None else samples
    disc = math.exp(-rate * spec.horizon)
    payoff = np.maximum(x - strike, 0.0)
    f = h * x - payoff
    ef = mean_estimate(f)
    return McPortfolio(
        discounted_payoff=mean_estimate(disc * payoff),
        payoff_variance=variance_estimate(payoff),
        payoff_stddev=stddev_estimate(payoff),
        expected_terminal=ef,
        terminal_variance=variance_estimate(f),
        discounted_terminal=McEstimate(disc * ef.mean, disc * ef.stderr),
    )


def business_days(start: dt.date, count: int) -> list[dt.date]:
    days = []
    day = start
    while len(days) < count:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days


def generate_gbm_series(
    spec: GbmSpec,
    days: int,
    day_fraction: float = 1.0 / 255.0,
    *,
    ticker: str = "SYN",
    start: dt.date = dt.date(2003, 1, 1),
) -> PriceSeries:
    """Daily closes from iterated one-day GBM steps of length ``day_fraction`` years.

    ``spec.horizon`` and ``spec.paths`` are ignored; the first close is ``spec.spot``.
    """
    if days < 2:
        raise DomainError(f"days must be >= 2, got {days}")
    z = standard_normals(spec.seed, days - 1)
    step = (spec.mu - 0.5 * spec.sigma**2) * day_fraction + spec.sigma * math.sqrt(day_fraction) * z
    log_path = np.concatenate(([0.0], np.cumsum(step)))
    return PriceSeries(ticker, tuple(business_days(start, days)), spec.spot * np.exp(log_path))


def write_series_csv(series: Iterable[PriceSeries], path: str | Path) -> None:
    """Write closes in the backtest input layout ``date,ticker,close``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "ticker", "close"])
        for s in series:
            for day, close in zip(s.dates, s.closes):
                writer.writerow([day.isoformat(), s.ticker, repr(float(close))])


FIXTURE_ASSETS = (
    # ticker, spot, mu, sigma (per year)
    ("SYNA", 20.0, 0.10, 0.30),
    ("SYNB", 45.0, 0.05, 0.25),
    ("SYNC", 8.0, 0.15, 0.45),
)


def synthetic_fixture(seed: int = 7, days: int = 400, day_fraction: float = 1.0 / 255.0) -> list[PriceSeries]:
    """Three GBM assets on a shared business-day calendar; long enough for n=120, J=100, 126-day options."""
    return [
        generate_gbm_series(GbmSpec(spot, mu, sigma, 1.0, seed=seed * 1000 + i), days, day_fraction, ticker=ticker)
        for i, (ticker, spot, mu, sigma) in enumerate(FIXTURE_ASSETS)
    ]
