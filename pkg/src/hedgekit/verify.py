"""Closed form vs Monte Carlo agreement suite behind ``hedgekit verify``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .market import ContractTerms, MarketState
from .mc_oracle import GENERATOR_NAME, GbmSpec, McEstimate, mc_portfolio, mc_tail_moments, sample_terminal
from .pricing import price_black_scholes, price_expectations, quote_mv, stddev_unhedged
from .special_math import lognormal_params, tail_moments

SE_TOLERANCE = 3.0
IDENTITY_TOLERANCE = 1e-12

# Reference parameter set: S=20, mu=0.1, r=0.05, sigma=1, T=180/365, at-the-money.
REFERENCE_MARKET = MarketState(spot=20.0, mu=0.1, sigma=1.0, rate=0.05)
REFERENCE_CONTRACT = ContractTerms(strike=20.0, maturity=180.0 / 365.0)


@dataclass(frozen=True)
class Check:
    name: str
    closed_form: float
    estimate: float
    stderr: float
    deviation: float  # in standard errors, or relative error for identities
    tolerance: float
    unit: str  # "se" or "rel"

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


@dataclass
class VerifyReport:
    seed: int
    paths: int
    draws: int
    generator: str = GENERATOR_NAME
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "generator": self.generator,
            "seed": self.seed,
            "paths": self.paths,
            "draws": self.draws,
            "passed": self.passed,
            "checks": [dict(asdict(c), passed=c.passed) for c in self.checks],
        }


def _se_check(name: str, value: float, est: McEstimate) -> Check:
    return Check(name, value, est.mean, est.stderr, est.deviation(value), SE_TOLERANCE, "se")


def _identity_check(name: str, lhs: float, rhs: float) -> Check:
    return Check(name, lhs, rhs, 0.0, abs(lhs - rhs) / abs(rhs), IDENTITY_TOLERANCE, "rel")


def reference_checks(market: MarketState, contract: ContractTerms, *, seed: int, paths: int,
                     corrupt_a5: bool = False) -> list[Check]:
    """Every closed form against its empirical counterpart at one parameter set."""
    params = lognormal_params(market, contract.maturity)
    tm = tail_moments(params, contract.strike, corrupt_a5=corrupt_a5)
    spec = GbmSpec(market.spot, market.mu, market.sigma, contract.maturity, seed=seed, paths=paths)
    x = sample_terminal(spec)
    mc_tm = mc_tail_moments(spec, contract.strike, x)
    checks = [
        _identity_check("A2+A3 = E[S]", tm.a2 + tm.a3, params.mean),
        _identity_check("A4+A5 = E[S^2]", tm.a4 + tm.a5, params.second_moment),
    ]
    for i, (closed, est) in enumerate(zip(tm.as_tuple(), mc_tm.as_tuple()), start=1):
        checks.append(_se_check(f"A{i}", closed, est))

    quote = quote_mv(market, contract)
    port = mc_portfolio(spec, contract.strike, market.rate, quote.hedge_ratio, x)
    checks += [
        _se_check("C_exp", price_expectations(market, contract), port.discounted_payoff),
        _se_check("E F (h*)", quote.expected_terminal, port.expected_terminal),
        _se_check("Q_var (h*)", quote.variance, port.terminal_variance),
        _se_check("S_dev unhedged", stddev_unhedged(market, contract), port.payoff_stddev),
        _se_check("C_MV", quote.price_mv, McEstimate(quote.hedge_ratio * market.spot - port.discounted_terminal.mean,
                                                       port.discounted_terminal.stderr)),
    ]
    rn_market = MarketState(market.spot, market.rate, market.sigma, market.rate)
    rn_spec = GbmSpec(market.spot, market.rate, market.sigma, contract.maturity, seed=seed, paths=paths)
    rn = mc_portfolio(rn_spec, contract.strike, market.rate, 0.0)
    checks.append(_se_check("C_BS (mu=r)", price_black_scholes(rn_market, contract), rn.discounted_payoff))
    return checks


def random_draw_checks(*, seed: int, draws: int, paths: int, corrupt_a5: bool = False) -> list[Check]:
    """A1..A5 against Monte Carlo on random parameter sets; reports the worst draw per moment.

    Strikes are placed within two terminal standard deviations of the median
    (``K = exp(a + z b)``, ``|z| <= 2``) so both tails carry samples.
    Total volatility stays at or below 1: beyond that ``S^2`` is so heavy-tailed
    that sample standard errors understate the true error at feasible path counts.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1 << 20,)))
    worst: dict[str, Check] = {}
    for i in range(draws):
        sigma = rng.uniform(0.05, 1.0)
        horizon = rng.uniform(0.01, 1.0)
        spot = math.exp(rng.uniform(math.log(0.1), math.log(100.0)))
        mu = rng.uniform(-0.2, 0.3)
        params = lognormal_params(MarketState(spot, mu, sigma, 0.0), horizon)
        strike = math.exp(params.a + rng.uniform(-2.0, 2.0) * params.b)
        tm = tail_moments(params, strike, corrupt_a5=corrupt_a5)
        spec = GbmSpec(spot, mu, sigma, horizon, seed=seed + 1 + i, paths=paths)
        mc = mc_tail_moments(spec, strike)
        candidates = [_identity_check("draws: A2+A3 = E[S]", tm.a2 + tm.a3, params.mean),
                      _identity_check("draws: A4+A5 = E[S^2]", tm.a4 + tm.a5, params.second_moment)]
        candidates += [_se_check(f"draws: A{k}", closed, est)
                       for k, (closed, est) in enumerate(zip(tm.as_tuple(), mc.as_tuple()), start=1)]
        for c in candidates:
            if c.name not in worst or c.deviation > worst[c.name].deviation:
                worst[c.name] = c
    return list(worst.values())


def run_verification(*, seed: int = 2006, draws: int = 20, paths: int = 1_000_000,
                     corrupt_a5: bool = False) -> VerifyReport:
    if paths < 100_000:
        raise ValueError(f"paths must be >= 100000, got {paths}")
    report = VerifyReport(seed=seed, paths=paths, draws=draws)
    report.checks += reference_checks(REFERENCE_MARKET, REFERENCE_CONTRACT, seed=seed, paths=paths,
                                      corrupt_a5=corrupt_a5)
    report.checks += random_draw_checks(seed=seed, draws=draws, paths=paths, corrupt_a5=corrupt_a5)
    return report


def format_report(report: VerifyReport) -> str:
    lines = [
        f"# generator: {report.generator}",
        f"# seed={report.seed} paths={report.paths} draws={report.draws}",
        f"{'check':<24}{'closed form':>22}{'estimate':>22}{'stderr':>12}{'deviation':>12}  result",
    ]
    for c in report.checks:
        dev = f"{c.deviation:.3g}{'se' if c.unit == 'se' else 'rel'}"
        lines.append(f"{c.name:<24}{c.closed_form:>22.12g}{c.estimate:>22.12g}{c.stderr:>12.3g}{dev:>12}  "
                     f"{'PASS' if c.passed else 'FAIL'}")
    lines.append("ALL PASS" if report.passed else "FAILED")
    return "\n".join(lines)
