"""Exception hierarchy shared by every hedgekit module."""


class HedgeKitError(Exception):
    """Base class for all hedgekit failures."""


class DomainError(HedgeKitError, ValueError):
    """An input lies outside the domain of a formula (non-finite, nonpositive, ...)."""


class InsufficientHistoryError(HedgeKitError, IndexError):
    """A rolling estimate or backtest asked for more history than the series holds."""


class ConfigurationError(HedgeKitError, ValueError):
    """Invalid or inconsistent run configuration."""


class DataError(HedgeKitError, ValueError):
    """Malformed input data, reported with file/line context where available."""


class ConsistencyError(HedgeKitError, ArithmeticError):
    """An internal numerical invariant failed (NaN, materially negative variance)."""
