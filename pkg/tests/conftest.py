import pytest

from hedgekit.market import ContractTerms, MarketState
from hedgekit.mc_oracle import GbmSpec, sample_terminal

# Reference parameter set: S=20, mu=0.1, r=0.05, sigma=1, T=180/365.
REF_T = 180.0 / 365.0
REF_MARKET = MarketState(spot=20.0, mu=0.1, sigma=1.0, rate=0.05)
REF_CONTRACT = ContractTerms(strike=20.0, maturity=REF_T)
MC_PATHS = 10_000_000
MC_SEED = 20060110


@pytest.fixture(scope="session")
def ref_samples():
    spec = GbmSpec(REF_MARKET.spot, REF_MARKET.mu, REF_MARKET.sigma, REF_T, seed=MC_SEED, paths=MC_PATHS)
    return spec, sample_terminal(spec)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion" in rep.nodeid and rep.when == "call":
                lines.append((rep.nodeid.split("::")[-1], outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {name}")
