"""
Historical replay of option writing on daily closes.

For each asset, ``issue_days`` consecutive calls are written, one per day, each
settling ``maturity_days`` rows later; the last option settles on the final
close. Every option is struck and priced from rolling estimates taken on its
issue day, floored at the administrative fee, and settled into cumulative
buyer and seller ledgers. Ledgers are finally averaged across assets with
weights proportional to the inverse average price.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError, ConsistencyError, DataError
from .estimators import (
    DEFAULT_BETA,
    DEFAULT_FEE_FLOOR,
    DEFAULT_GAMMA,
    DEFAULT_WINDOW,
    PriceSeries,
    annualize,
    apply_fee_floor,
    rolling_estimates,
    strike_rule,
)
from .market import ContractTerms, MarketState
from .pricing import price_expectations, quote_mv

log = logging.getLogger(__name__)


class Strategy(str, enum.Enum):
    EXPECTATIONS = "expectations"
    MEAN_VARIANCE = "mv"


@dataclass(frozen=True)
class BacktestConfig:
    window: int = DEFAULT_WINDOW
    issue_days: int = 100
    maturity_days: int = 126
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    fee_floor: float = DEFAULT_FEE_FLOOR
    rate: float = 0.05
    day_count_base: float = 365.0  # annualises per-day estimates
    trading_days_per_year: float = 255.0  # converts maturity_days to T in years
    sigma_floor: float = 1e-4  # per sqrt(day)
    strategy: Strategy = Strategy.EXPECTATIONS

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.window < 2:
            raise ConfigurationError(f"window must be >= 2, got {self.window}")
        if self.issue_days < 1:
            raise ConfigurationError(f"issue_days must be >= 1, got {self.issue_days}")
        if self.maturity_days < 1:
            raise ConfigurationError(f"maturity_days must be >= 1, got {self.maturity_days}")
        if not self.fee_floor >= 0.0:
            raise ConfigurationError(f"fee_floor must be >= 0, got {self.fee_floor}")
        if not (self.day_count_base > 0.0 and self.trading_days_per_year > 0.0):
            raise ConfigurationError("day-count bases must be > 0")
        if not self.sigma_floor > 0.0:
            raise ConfigurationError(f"sigma_floor must be > 0, got {self.sigma_floor}")
        for name in ("beta", "gamma", "fee_floor", "rate", "sigma_floor"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @property
    def maturity_years(self) -> float:
        return self.maturity_days / self.trading_days_per_year

    @property
    def required_history(self) -> int:
        return self.window + self.maturity_days + self.issue_days


def buyer_step(prev: float, settle_price: float, strike: float, premium: float) -> float:
    """Buyer's cumulative profit after one option settles (exercised when ``settle >= strike``)."""
    if settle_price >= strike:
        return prev + ((settle_price - strike) - premium)
    return prev + (-premium)


def seller_step_expectations(prev: float, settle_price: float, strike: float, premium: float) -> float:
    """Mirror of :func:`buyer_step`; each delta is the exact negation of the buyer's."""
    if settle_price >= strike:
        return prev + (premium - (settle_price - strike))
    return prev + premium


def seller_step_mv(prev: float, settle_price: float, issue_price: float, strike: float,
                   premium: float, h: float) -> float:
    """Writer holding ``h`` shares bought at ``issue_price``; delivers on exercise."""
    if settle_price >= strike:
        return prev + premium + (1.0 - h) * (strike - settle_price)
    return prev + premium + h * (settle_price - issue_price)


@dataclass
class AssetLedger:
    """Per-asset record; paths over options ``0..J-1``, cumulative paths start at 0."""

    ticker: str
    issue_dates: list[dt.date]
    settle_dates: list[dt.date]
    spots: np.ndarray
    settle_prices: np.ndarray
    strikes: np.ndarray
    option_prices: np.ndarray
    turnover: np.ndarray
    buyer_path: np.ndarray  # length J + 1
    seller_path: np.ndarray  # length J + 1
    hedge_ratios: np.ndarray | None = None
    floored_sigma_days: int = 0

    @property
    def average_price(self) -> float:
        return float(np.mean(self.spots))

    @property
    def final_buyer(self) -> float:
        return float(self.buyer_path[-1])

    @property
    def final_seller(self) -> float:
        return float(self.seller_path[-1])


@dataclass
class AggregateReport:
    strategy: Strategy
    tickers: list[str]
    weights: dict[str, float]
    average_prices: dict[str, float]
    buyer: np.ndarray  # AB, length J + 1
    seller: np.ndarray  # AS, length J + 1
    premium_turnover: np.ndarray  # AT: weighted premiums, length J
    hedged_turnover: np.ndarray | None = None  # AQ: weighted premium + h S (MV only)
    final_profits: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def turnover(self) -> np.ndarray:
        """The turnover series reported for this strategy (AT, or AQ for MV)."""
        if self.strategy is Strategy.MEAN_VARIANCE:
            return self.hedged_turnover
        return self.premium_turnover


def _finite(value: float, what: str, ticker: str, day: dt.date) -> float:
    if not math.isfinite(value):
        raise ConsistencyError(f"{ticker} {day}: {what} is not finite ({value!r})")
    return value


def run_asset(series: PriceSeries, config: BacktestConfig) -> AssetLedger:
    n_rows = len(series)
    if n_rows < config.required_history:
        raise ConfigurationError(
            f"asset {series.ticker!r} has {n_rows} closes; window + maturity_days + issue_days "
            f"= {config.required_history} required"
        )
    J, M = config.issue_days, config.maturity_days
    first_issue = n_rows - M - J
    T = config.maturity_years
    mv = config.strategy is Strategy.MEAN_VARIANCE

    spots = np.empty(J)
    settles = np.empty(J)
    strikes = np.empty(J)
    prices = np.empty(J)
    turnover = np.empty(J)
    hedges = np.empty(J) if mv else None
    buyer = np.zeros(J + 1)
    seller = np.zeros(J + 1)
    floored = 0
    issue_dates, settle_dates = [], []

    for j in range(J):
        row = first_issue + j
        day = series.dates[row]
        spot = float(series.closes[row])
        settle = float(series.closes[row + M])
        est = rolling_estimates(series, row, config.window)
        if est.sigma_hat < config.sigma_floor:
            floored += 1
            log.warning("%s %s: sigma_hat %.3g floored at %.3g", series.ticker, day,
                        est.sigma_hat, config.sigma_floor)
            est = type(est)(est.mu_hat, config.sigma_floor, est.mean_log_return, est.window)
        mu, sigma = annualize(est, config.day_count_base)
        strike = _finite(strike_rule(spot, mu, sigma, T, config.beta, config.gamma), "strike", series.ticker, day)
        market = MarketState(spot=spot, mu=mu, sigma=sigma, rate=config.rate)
        contract = ContractTerms(strike=strike, maturity=T)
        if mv:
            quote = quote_mv(market, contract)
            h = _finite(quote.hedge_ratio, "hedge ratio", series.ticker, day)
            if not 0.0 < h < 1.0:
                raise ConsistencyError(f"{series.ticker} {day}: hedge ratio {h!r} outside (0, 1)")
            raw = quote.price_mv
        else:
            raw = price_expectations(market, contract)
        premium = _finite(apply_fee_floor(raw, spot, config.fee_floor), "premium", series.ticker, day)

        buyer[j + 1] = buyer_step(buyer[j], settle, strike, premium)
        if mv:
            hedges[j] = h
            seller[j + 1] = seller_step_mv(seller[j], settle, spot, strike, premium, h)
            turnover[j] = premium + h * spot
        else:
            seller[j + 1] = seller_step_expectations(seller[j], settle, strike, premium)
            turnover[j] = premium
        _finite(buyer[j + 1] + seller[j + 1], "ledger", series.ticker, day)

        spots[j], settles[j], strikes[j], prices[j] = spot, settle, strike, premium
        issue_dates.append(day)
        settle_dates.append(series.dates[row + M])

    return AssetLedger(
        ticker=series.ticker,
        issue_dates=issue_dates,
        settle_dates=settle_dates,
        spots=spots,
        settle_prices=settles,
        strikes=strikes,
        option_prices=prices,
        turnover=turnover,
        buyer_path=buyer,
        seller_path=seller,
        hedge_ratios=hedges,
        floored_sigma_days=floored,
    )


def inverse_price_weights(average_prices: Mapping[str, float]) -> dict[str, float]:
    inv = {k: 1.0 / v for k, v in average_prices.items()}
    total = math.fsum(inv.values())
    return {k: v / total for k, v in inv.items()}


def aggregate(ledgers: Mapping[str, AssetLedger], strategy: Strategy) -> AggregateReport:
    tickers = sorted(ledgers)
    avg = {t: ledgers[t].average_price for t in tickers}
    weights = inverse_price_weights(avg)
    first = ledgers[tickers[0]]
    # Fixed ticker order keeps the reduction deterministic and AB = -AS exact.
    ab = np.zeros_like(first.buyer_path)
    as_ = np.zeros_like(first.seller_path)
    at = np.zeros_like(first.option_prices)
    aq = np.zeros_like(first.option_prices) if strategy is Strategy.MEAN_VARIANCE else None
    for t in tickers:
        led, w = ledgers[t], weights[t]
        if led.buyer_path.shape != ab.shape:
            raise ConfigurationError("all assets must share the same number of issue days")
        ab += w * led.buyer_path
        as_ += w * led.seller_path
        at += w * led.option_prices
        if aq is not None:
            aq += w * led.turnover
    return AggregateReport(
        strategy=strategy,
        tickers=tickers,
        weights=weights,
        average_prices=avg,
        buyer=ab,
        seller=as_,
        premium_turnover=at,
        hedged_turnover=aq,
        final_profits={t: (ledgers[t].final_buyer, ledgers[t].final_seller) for t in tickers},
    )


def run_backtest(
    series: Mapping[str, PriceSeries] | Iterable[PriceSeries], config: BacktestConfig
) -> tuple[dict[str, AssetLedger], AggregateReport]:
    """Replay one strategy over every asset and aggregate the results."""
    if isinstance(series, Mapping):
        items = list(series.values())
    else:
        items = list(series)
    if not items:
        raise ConfigurationError("no price series supplied")
    ledgers = {s.ticker: run_asset(s, config) for s in items}
    if len(ledgers) != len(items):
        raise ConfigurationError("duplicate tickers in input")
    return ledgers, aggregate(ledgers, config.strategy)


# -- I/O ---------------------------------------------------------------------

PRICE_HEADER = ["date", "ticker", "close"]
FINAL_HEADER = ["ticker", "avg_price", "buy_exp", "sell_exp", "buy_mv", "sell_mv"]


def load_price_csv(path: str | Path) -> dict[str, PriceSeries]:
    """Read ``date,ticker,close`` rows (any order) into per-ticker series."""
    path = Path(path)
    rows: dict[str, dict[dt.date, float]] = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PRICE_HEADER:
            raise DataError(f"{path}:1: expected header {','.join(PRICE_HEADER)}, got {header}")
        for raw in reader:
            where = f"{path}:{reader.line_num}"
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != 3:
                raise DataError(f"{where}: expected 3 fields, got {len(raw)}")
            date_s, ticker, close_s = (c.strip() for c in raw)
            try:
                day = dt.date.fromisoformat(date_s)
            except ValueError:
                raise DataError(f"{where}: bad ISO date {date_s!r}") from None
            try:
                close = float(close_s)
            except ValueError:
                raise DataError(f"{where}: bad close {close_s!r}") from None
            if not (math.isfinite(close) and close > 0.0):
                raise DataError(f"{where}: close must be finite and > 0, got {close_s!r}")
            if not ticker:
                raise DataError(f"{where}: empty ticker")
            per = rows.setdefault(ticker, {})
            if day in per:
                raise DataError(f"{where}: duplicate row for {ticker} on {day}")
            per[day] = close
    if not rows:
        raise DataError(f"{path}: no data rows")
    out = {}
    for ticker in sorted(rows):
        days = sorted(rows[ticker])
        out[ticker] = PriceSeries(ticker, tuple(days), np.array([rows[ticker][d] for d in days]))
    return out


def _money(value: float) -> str:
    return f"{value:.2f}"


def write_aggregate_csv(report: AggregateReport, path: str | Path) -> None:
    """``step,AB,AS,turnover``: ledgers after each settlement and that option's turnover."""
    turnover = report.turnover
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "AB", "AS", "turnover"])
        for s in range(1, len(report.buyer)):
            writer.writerow([s, _money(report.buyer[s]), _money(report.seller[s]), _money(turnover[s - 1])])


def write_final_profits_csv(exp_report: AggregateReport, mv_report: AggregateReport, path: str | Path) -> None:
    """One row per asset: average price and final buyer/seller profit for both strategies."""
    if exp_report.tickers != mv_report.tickers:
        raise ConfigurationError("reports cover different assets")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FINAL_HEADER)
        for t in exp_report.tickers:
            be, se = exp_report.final_profits[t]
            bm, sm = mv_report.final_profits[t]
            writer.writerow([t, _money(exp_report.average_prices[t]), _money(be), _money(se), _money(bm), _money(sm)])
