"""Fair-market order-flow simulation and fair-price statistics for L1 tick data.

The package simulates the Madhavan-Richardson-Roomans order-flow model (a
market whose fair price is a martingale by construction) and computes
model-independent fairness statistics on any L1 event stream, simulated or
ingested: next-trade price gaps on a time grid, post-fill price gaps per
side, and response-function variations, all conditioned on events of the
strict past.
"""
from .book import (
    NO_TRADE,
    CumulativeLiquidity,
    EventKind,
    EventStream,
    MarketEvent,
    Side,
    apply_event,
    compute_next_trade_indices,
    first_trade_price_mismatch,
    mid_price,
    quantize_prices,
)
from .errors import (
    CrossedBook,
    CrossedQuote,
    DepthTooSmall,
    EmptyConditioning,
    FairMarketError,
    OrderingError,
    ParseError,
    PriceOffGrid,
    TooFewSamples,
    TradeExceedsLiquidity,
)
from .ingest import (
    AssetConfig,
    load_asset_config,
    load_session,
    save_asset_config,
    save_session,
)
from .mrr import (
    MrrParams,
    MrrPath,
    MrrState,
    OracleResult,
    average_market_impact,
    next_ask_expectation,
    next_bid_expectation,
    next_trade_price_expectation,
    quote,
    required_depth,
    sign_prob_up,
    simulate,
    step,
)
from .stats import (
    ALL,
    DEFAULT_RESPONSE_DELTAS,
    LAST_MID_DOWN,
    LAST_MID_UP,
    LAST_TRADE_BUY,
    LAST_TRADE_SELL,
    STANDARD_EVENTS,
    ConditioningEvent,
    GridSpec,
    ResponseCurve,
    StatResult,
    build_grid,
    evaluate_conditioning,
    next_trade_gap,
    pool_stats,
    post_fill_gap,
    response_curve,
    stderr_of_mean,
    trim_window,
)

__version__ = "0.1.0"
