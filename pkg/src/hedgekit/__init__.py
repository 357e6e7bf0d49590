"""Mean-variance hedging of European calls under lognormal prices."""

from .errors import (
    ConfigurationError,
    ConsistencyError,
    DataError,
    DomainError,
    HedgeKitError,
    InsufficientHistoryError,
)
from .market import ContractTerms, MarketState
from .pricing import (
    HedgeQuote,
    hedge_ratio,
    portfolio_moments,
    price_black_scholes,
    price_expectations,
    price_mv,
    quote_mv,
    stddev_unhedged,
)
from .special_math import LognormalParams, TailMoments, lognormal_params, std_normal_cdf, tail_moments

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "ConsistencyError", "DataError", "DomainError", "HedgeKitError",
    "InsufficientHistoryError", "ContractTerms", "MarketState", "HedgeQuote", "hedge_ratio",
    "portfolio_moments", "price_black_scholes", "price_expectations", "price_mv", "quote_mv",
    "stddev_unhedged", "LognormalParams", "TailMoments", "lognormal_params", "std_normal_cdf",
    "tail_moments",
]
