"""Command-line front end: ``hedgekit {price,curve,backtest,verify,fixture}``.

Settings resolve as built-in defaults < config file < command-line flags. The
config file is flat ``key = value`` text (``#`` comments allowed), taken from
``--config`` or the ``HEDGEKIT_CONFIG`` environment variable.

Exit codes: 0 success, 2 usage error, 3 data error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .backtest import (
    BacktestConfig,
    Strategy,
    load_price_csv,
    run_backtest,
    write_aggregate_csv,
    write_final_profits_csv,
)
from .errors import ConfigurationError, DataError, DomainError, InsufficientHistoryError
from .market import ContractTerms, MarketState
from .mc_oracle import synthetic_fixture, write_series_csv
from .pricing import price_black_scholes, price_expectations, quote_mv, stddev_unhedged
from .verify import format_report, run_verification

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 2, 3, 4
CONFIG_ENV = "HEDGEKIT_CONFIG"

_FLOAT_KEYS = {"spot", "strike", "mu", "sigma", "rate", "maturity", "beta", "gamma", "fee_floor",
               "day_count_base", "trading_days_per_year", "sigma_floor"}
_INT_KEYS = {"window", "issue_days", "maturity_days", "seed", "paths", "draws"}
_STR_KEYS = {"method", "input", "output", "format", "k_grid"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


class UsageError(Exception):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KNOWN_KEYS:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config_file(path: str | os.PathLike) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text, str(path))


def _convert(key: str, raw: Any) -> Any:
    if raw is None or not isinstance(raw, str):
        return raw
    try:
        if key in _FLOAT_KEYS:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if key in _INT_KEYS:
            return int(raw)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {raw!r}") from None
    return raw


def resolve_settings(args: argparse.Namespace) -> dict[str, Any]:
    config_path = args.config or os.environ.get(CONFIG_ENV)
    settings: dict[str, Any] = {}
    if config_path:
        settings.update(load_config_file(config_path))
    for key in KNOWN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return {k: _convert(k, v) for k, v in settings.items()}


def _require(settings: dict[str, Any], *keys: str) -> list[Any]:
    missing = [k for k in keys if settings.get(k) is None]
    if missing:
        raise UsageError("missing required value(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    return [settings[k] for k in keys]


def _market(settings: dict[str, Any], need_mu: bool) -> MarketState:
    spot, sigma = _require(settings, "spot", "sigma")
    rate = settings.get("rate", 0.05)
    mu = settings.get("mu")
    if mu is None:
        if need_mu:
            _require(settings, "mu")
        mu = rate
    return MarketState(spot=spot, mu=mu, sigma=sigma, rate=rate)


def _emit(text: str, settings: dict[str, Any]) -> None:
    out = settings.get("output")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _render_records(records: list[dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        payload = records[0] if len(records) == 1 else records
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
    return buf.getvalue()


def cmd_price(settings: dict[str, Any]) -> int:
    method = settings.get("method", "mv")
    if method not in ("bs", "exp", "mv"):
        raise UsageError(f"invalid value for method: {method!r} (choose bs, exp, mv)")
    market = _market(settings, need_mu=method != "bs")
    strike, maturity = _require(settings, "strike", "maturity")
    contract = ContractTerms(strike=strike, maturity=maturity)
    record: dict[str, Any] = {"method": method}
    if method == "bs":
        record["price"] = price_black_scholes(market, contract)
    elif method == "exp":
        record["price"] = price_expectations(market, contract)
    else:
        q = quote_mv(market, contract)
        record.update(price=q.price_mv, hedge_ratio=q.hedge_ratio, expected_terminal=q.expected_terminal,
                      variance=q.variance, stddev=q.stddev)
    _emit(_render_records([record], settings.get("format", "json")), settings)
    return EXIT_OK


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            grid = [start + i * step for i in range(count)]
        else:
            grid = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"invalid value for k_grid: {text!r}") from None
    if not grid or any(not (math.isfinite(k) and k > 0) for k in grid):
        raise UsageError("k_grid must contain positive strikes")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("k_grid must be strictly ascending")
    return grid


def curve_rows(market: MarketState, maturity: float, grid: Sequence[float]) -> list[dict[str, float]]:
    rows = []
    for k in grid:
        contract = ContractTerms(strike=k, maturity=maturity)
        q = quote_mv(market, contract)
        rows.append({
            "K": k,
            "C_bs": price_black_scholes(market, contract),
            "C_exp": price_expectations(market, contract),
            "C_mv": q.price_mv,
            "h": q.hedge_ratio,
            "stddev_hedged": q.stddev,
            "stddev_unhedged": stddev_unhedged(market, contract),
        })
    return rows


def cmd_curve(settings: dict[str, Any]) -> int:
    market = _market(settings, need_mu=True)
    (maturity,) = _require(settings, "maturity")
    grid = parse_grid(settings.get("k_grid", "10:40:1"))
    _emit(_render_records(curve_rows(market, maturity, grid), settings.get("format", "csv")), settings)
    return EXIT_OK


def backtest_config(settings: dict[str, Any], strategy: Strategy) -> BacktestConfig:
    fields = ("window", "issue_days", "maturity_days", "beta", "gamma", "fee_floor", "rate",
              "day_count_base", "trading_days_per_year", "sigma_floor")
    return BacktestConfig(strategy=strategy, **{k: settings[k] for k in fields if settings.get(k) is not None})


def cmd_backtest(settings: dict[str, Any]) -> int:
    input_path, output_dir = _require(settings, "input", "output")
    series = load_price_csv(input_path)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    reports = {}
    for strategy in (Strategy.EXPECTATIONS, Strategy.MEAN_VARIANCE):
        _, report = run_backtest(series, backtest_config(settings, strategy))
        write_aggregate_csv(report, output_dir / f"aggregate_{strategy.value}.csv")
        reports[strategy] = report
    exp, mv = reports[Strategy.EXPECTATIONS], reports[Strategy.MEAN_VARIANCE]
    write_final_profits_csv(exp, mv, output_dir / "final_profits.csv")
    for t in exp.tickers:
        be, se = exp.final_profits[t]
        bm, sm = mv.final_profits[t]
        print(f"{t}: avg={exp.average_prices[t]:.2f} exp buy={be:.2f} sell={se:.2f} "
              f"mv buy={bm:.2f} sell={sm:.2f}")
    return EXIT_OK


def cmd_verify(settings: dict[str, Any], corrupt_a5: bool = False) -> int:
    paths = settings.get("paths", 1_000_000)
    if paths < 100_000:
        raise UsageError(f"invalid value for paths: {paths} (must be >= 100000)")
    report = run_verification(seed=settings.get("seed", 2006), draws=settings.get("draws", 20),
                              paths=paths, corrupt_a5=corrupt_a5)
    fmt = settings.get("format")
    _emit(json.dumps(report.to_dict(), indent=2) + "\n" if fmt == "json" else format_report(report) + "\n",
          settings)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_fixture(settings: dict[str, Any]) -> int:
    (output,) = _require(settings, "output")
    write_series_csv(synthetic_fixture(seed=settings.get("seed", 7)), output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
    common.add_argument("--output", help="output file (directory for backtest)")
    common.add_argument("--format", choices=("csv", "json"))

    market = argparse.ArgumentParser(add_help=False)
    for flag in ("spot", "mu", "sigma", "rate"):
        market.add_argument(f"--{flag}")

    parser = argparse.ArgumentParser(prog="hedgekit", description="Mean-variance hedging toolkit for European calls.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", parents=[common, market], help="price one contract")
    p.add_argument("--strike")
    p.add_argument("--maturity", help="years")
    p.add_argument("--method", choices=("bs", "exp", "mv"))

    c = sub.add_parser("curve", parents=[common, market], help="prices and hedge ratios over a strike grid")
    c.add_argument("--maturity", help="years")
    c.add_argument("--k-grid", dest="k_grid", help="start:stop:step or comma list (default 10:40:1)")

    b = sub.add_parser("backtest", parents=[common], help="replay both strategies over a price CSV")
    b.add_argument("--input", help="CSV with header date,ticker,close")
    b.add_argument("--rate")
    for flag in ("window", "issue-days", "maturity-days", "beta", "gamma", "fee-floor",
                 "day-count-base", "trading-days-per-year", "sigma-floor"):
        b.add_argument(f"--{flag}", dest=flag.replace("-", "_"))

    v = sub.add_parser("verify", parents=[common], help="Monte Carlo agreement suite")
    v.add_argument("--seed")
    v.add_argument("--draws")
    v.add_argument("--paths")
    v.add_argument("--corrupt-a5", action="store_true", help=argparse.SUPPRESS)

    f = sub.add_parser("fixture", parents=[common], help="write the synthetic 3-asset price CSV")
    f.add_argument("--seed")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        if args.command == "price":
            return cmd_price(settings)
        if args.command == "curve":
            return cmd_curve(settings)
        if args.command == "backtest":
            return cmd_backtest(settings)
        if args.command == "verify":
            return cmd_verify(settings, corrupt_a5=args.corrupt_a5)
        return cmd_fixture(settings)
    except (UsageError, DomainError, ConfigurationError) as exc:
        print(f"hedgekit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, InsufficientHistoryError) as exc:
        print(f"hedgekit {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
