"""Market and contract inputs consumed by the pricing formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class MarketState:
    """Spot price plus annualised appreciation, volatility and riskless rate."""

    spot: float
    mu: float
    sigma: float
    rate: float

    def __post_init__(self) -> None:
        for name in ("spot", "mu", "sigma", "rate"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.spot <= 0.0:
            raise DomainError(f"spot must be > 0, got {self.spot!r}")
        if self.sigma <= 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma!r}")


@dataclass(frozen=True)
class ContractTerms:
    """European call terms: strike ``K`` and time to maturity ``T`` in years."""

    strike: float
    maturity: float

    def __post_init__(self) -> None:
        for name in ("strike", "maturity"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.strike <= 0.0:
            raise DomainError(f"strike must be > 0, got {self.strike!r}")
        if self.maturity <= 0.0:
            raise DomainError(f"maturity must be > 0, got {self.maturity!r}")
