"""Exception hierarchy for the fairmarket package."""
from __future__ import annotations


class FairMarketError(Exception):
    """Base class for all fairmarket-specific errors."""


class OrderingError(FairMarketError):
    """Events are not strictly increasing in ``(ts_ns, seq)``."""


class CrossedQuote(FairMarketError):
    """A record carries ``best_ask <= best_bid``."""


class CrossedBook(FairMarketError):
    """A book update would leave the best ask at or below the best bid."""


class TradeExceedsLiquidity(FairMarketError):
    """A trade consumes more volume than the book holds on its side."""


class PriceOffGrid(FairMarketError):
    """A price is not an integer multiple of the configured price step."""


class ParseError(FairMarketError):
    """A data file does not conform to the expected schema."""


class EmptyConditioning(FairMarketError):
    """No sample point satisfies the conditioning event."""


class TooFewSamples(FairMarketError):
    """Not enough samples to form the requested statistic."""


class DepthTooSmall(FairMarketError):
    """Enumeration depth leaves a tail bound too large to be informative.

    ``required_depth`` carries an estimate of the depth that would bring the
    tail bound below the requested ceiling, or ``None`` if no such depth was
    found.
    """

    def __init__(self, message: str, required_depth: int | None = None):
        super().__init__(message)
        self.required_depth = required_depth
