"""Fair-price statistics on event streams.

Three families of estimators, all pure functions of an immutable
:class:`~fairmarket.book.EventStream`:

* :func:`next_trade_gap` samples the difference between the next buy
  execution price and the next sell execution price on a regular time grid.
  On a fair market its expectation is zero for any conditioning on the
  strict past, and it is bounded by twice the tick on a real exchange.
* :func:`post_fill_gap` averages, over one side's trades, the execution
  price minus the next same-side execution price (strictly after the fill).
  Zero expectation means resting orders at the touch have no expected gain
  or loss once filled.
* :func:`response_curve` measures how the same quantity drifts a lag
  ``delta`` after a fill; a flat curve means the profitability of a
  market-making strategy does not depend on its horizon.

Conditioning events are predicates on the strict past of the evaluation
point: events with ``(ts_ns, seq)`` strictly smaller. Points whose predicate
cannot be decided (no past trade, no past mid move) are excluded, as are
points with no future trade to look up; counts always refer to the samples
actually averaged.

Gap statistics report the i.i.d. standard error: their samples are only
weakly dependent at usual grid spacings, and downstream checks compensate
with wide (4 standard error) bands. Response curves are different, their
per-lag samples share overlapping future windows, so they report batch-means
errors instead (see :class:`ResponseCurve`).

Sessions can be processed in parallel and pooled with :func:`pool_stats`;
pooling is associative and commutative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .book import EventStream, Side
from .errors import EmptyConditioning, TooFewSamples

__all__ = [
    "ConditioningEvent",
    "ALL",
    "LAST_TRADE_BUY",
    "LAST_TRADE_SELL",
    "LAST_MID_UP",
    "LAST_MID_DOWN",
    "STANDARD_EVENTS",
    "GridSpec",
    "StatResult",
    "ResponseCurve",
    "DEFAULT_RESPONSE_DELTAS",
    "build_grid",
    "trim_window",
    "next_trade_gap",
    "post_fill_gap",
    "response_curve",
    "evaluate_conditioning",
    "stderr_of_mean",
    "pool_stats",
]


# ----------------------------------------------------------------------
# Conditioning events
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConditioningEvent:
    """Predicate over the strict past of an evaluation point.

    Built-in events are vectorized; :meth:`custom` wraps an arbitrary
    ``predicate(stream, prefix_end) -> bool`` where ``prefix_end`` is the
    index of the last event strictly before the point (-1 when the past is
    empty). Predicates must read only that prefix.
    """

    name: str
    _kind: str
    _arg: int = 0
    _predicate: Callable[[EventStream, int], bool] | None = None

    @staticmethod
    def custom(name: str, predicate: Callable[[EventStream, int], bool]) -> "ConditioningEvent":
        return ConditioningEvent(name, "custom", 0, predicate)

    def __str__(self) -> str:
        return self.name


ALL = ConditioningEvent("all", "all")
LAST_TRADE_BUY = ConditioningEvent("last_trade_buy", "last_trade", int(Side.ASK))
LAST_TRADE_SELL = ConditioningEvent("last_trade_sell", "last_trade", int(Side.BID))
LAST_MID_UP = ConditioningEvent("last_mid_up", "last_mid", 1)
LAST_MID_DOWN = ConditioningEvent("last_mid_down", "last_mid", -1)

STANDARD_EVENTS: tuple[ConditioningEvent, ...] = (
    ALL,
    LAST_TRADE_BUY,
    LAST_TRADE_SELL,
    LAST_MID_UP,
    LAST_MID_DOWN,
)
"""The battery's default conditioning set: everything, last-trade side, last mid move."""


def _prefix_end_at_times(stream: EventStream, times: np.ndarray) -> np.ndarray:
    """Index of the last event strictly before each time (-1: none).

    Events at exactly the sampled time belong to the present, not the past.
    """
    return np.searchsorted(stream.ts_ns, times, side="left") - 1


def _condition_mask(stream: EventStream, prefix_end: np.ndarray, cond: ConditioningEvent) -> np.ndarray:
    if cond._kind == "all":
        return np.ones(len(prefix_end), dtype=bool)
    if cond._kind == "custom":
        assert cond._predicate is not None
        return np.fromiter(
            (cond._predicate(stream, int(j)) for j in prefix_end), bool, len(prefix_end)
        )
    has_past = prefix_end >= 0
    j = np.clip(prefix_end, 0, None)
    if cond._kind == "last_trade":
        lt = stream.last_trade_idx_upto[j]
        seen = has_past & (lt >= 0)
        return seen & (stream.side[np.clip(lt, 0, None)] == cond._arg)
    if cond._kind == "last_mid":
        return has_past & (stream.last_middir_upto[j] == cond._arg)
    raise ValueError(f"unknown conditioning kind {cond._kind!r}")


def evaluate_conditioning(stream: EventStream, index: int, cond: ConditioningEvent) -> bool:
    """Evaluate a conditioning event on the strict past of event ``index``.

    Returns False when no qualifying past event exists (the point is then
    excluded from averages rather than counted).
    """
    prefix_end = np.asarray([int(index) - 1], dtype=np.int64)
    return bool(_condition_mask(stream, prefix_end, cond)[0])


# ----------------------------------------------------------------------
# Grids and windows
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Regular sampling grid: spacing plus head/tail session trims (seconds)."""

    dt_s: float = 10.0
    trim_head_s: float = 3600.0
    trim_tail_s: float = 3600.0

    def __post_init__(self):
        if not self.dt_s > 0:
            raise ValueError(f"dt_s must be positive, got {self.dt_s!r}")
        if self.trim_head_s < 0 or self.trim_tail_s < 0:
            raise ValueError("trim durations must be >= 0")


def trim_window(stream: EventStream, spec: GridSpec) -> tuple[int, int]:
    """Trimmed session window ``[start_ns, end_ns)``; empty when trims overlap."""
    if len(stream) == 0:
        return (0, 0)
    start = stream.ts_ns[0] + int(round(spec.trim_head_s * 1e9))
    end = stream.ts_ns[-1] - int(round(spec.trim_tail_s * 1e9))
    return (int(start), int(end))


def build_grid(stream: EventStream, spec: GridSpec) -> np.ndarray:
    """Grid timestamps ``start + trim_head + k * dt`` inside the trimmed window.

    Start-inclusive, end-exclusive; empty when the session is shorter than
    the trims.
    """
    start, end = trim_window(stream, spec)
    if start >= end:
        return np.empty(0, dtype=np.int64)
    return np.arange(start, end, int(round(spec.dt_s * 1e9)), dtype=np.int64)


# ----------------------------------------------------------------------
# Results
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StatResult:
    """One estimate with its sample count, standard error and tick ratio.

    ``stderr`` and ``estimate_in_ticks`` are NaN when fewer than two or zero
    samples contribute.
    """

    estimate: float
    count: int
    stderr: float
    estimate_in_ticks: float


@dataclass(eq=False)
class ResponseCurve:
    """Drift of the next same-side execution price, per lag, after a fill.

    Values are anchored at the fill itself: each entry averages
    ``price(next same-side trade at or after t + delta) -
    price(next same-side trade strictly after t)`` over fills at times t,
    excluding (per lag) fills where either lookup runs off the stream.

    Fills within a lag of each other look up nearly the same future trades,
    so the per-lag samples are strongly dependent. ``stderrs`` therefore
    come from batch means over blocks spanning twice the lag (the i.i.d.
    formula would understate the error by roughly the square root of the
    number of fills per lag window).
    """

    side: Side
    deltas_s: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    stderrs: np.ndarray


def stderr_of_mean(samples) -> float:
    """Standard error of the sample mean: sample std / sqrt(n). Needs n >= 2."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size < 2:
        raise TooFewSamples(f"need at least 2 samples, got {arr.size}")
    return float(arr.std(ddof=1) / math.sqrt(arr.size))


def _result_from_samples(samples: np.ndarray, tick: float) -> StatResult:
    n = int(samples.size)
    if n == 0:
        return StatResult(math.nan, 0, math.nan, math.nan)
    est = float(samples.mean())
    se = stderr_of_mean(samples) if n >= 2 else math.nan
    return StatResult(est, n, se, est / tick)


def pool_stats(results: Iterable[StatResult], tick: float) -> StatResult:
    """Pool per-session results into one count-weighted estimate.

    Reconstructs sample moments from each (estimate, count, stderr) triple,
    so the pooled mean and standard error equal those of the concatenated
    samples. Associative and commutative; zero-count inputs are ignored.
    """
    n_total = 0
    s1 = 0.0
    s2 = 0.0
    for r in results:
        if r.count == 0:
            continue
        n_total += int(r.count)
        s1 += float(r.estimate) * r.count
        if r.count == 1:
            s2 += float(r.estimate) ** 2
        else:
            s2 += float(r.stderr) ** 2 * r.count * (r.count - 1) + float(r.estimate) ** 2 * r.count
    if n_total == 0:
        return StatResult(math.nan, 0, math.nan, math.nan)
    est = s1 / n_total
    if n_total >= 2:
        var_num = max(s2 - s1**2 / n_total, 0.0)
        se = math.sqrt(var_num / (n_total - 1) / n_total)
    else:
        se = math.nan
    return StatResult(est, n_total, se, est / tick)


# ----------------------------------------------------------------------
# Estimators
# ----------------------------------------------------------------------


def _next_trade_price_at(
    stream: EventStream, side: Side, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Price steps of the first ``side`` trade at or after each time, with validity."""
    trades = stream.side_trades(side)
    i = np.searchsorted(trades.ts_ns, times, side="left")
    ok = i < len(trades.ts_ns)
    price = trades.price_steps[np.clip(i, 0, max(len(trades.ts_ns) - 1, 0))] if len(trades.ts_ns) else np.zeros(len(times), np.int64)
    return price, ok


def next_trade_gap(
    stream: EventStream,
    grid: GridSpec | Sequence[int] | np.ndarray,
    cond: ConditioningEvent = ALL,
) -> StatResult:
    """Mean of (next buy price - next sell price) over conditioned grid points.

    ``grid`` is either a :class:`GridSpec` (expanded with :func:`build_grid`)
    or explicit timestamps. Lookups are at-or-after: a trade printing exactly
    at a grid time is its own next trade. Grid points missing either lookup,
    or failing the conditioning, drop out of both numerator and count.

    Raises :class:`EmptyConditioning` when nothing survives.
    """
    times = build_grid(stream, grid) if isinstance(grid, GridSpec) else np.asarray(grid, dtype=np.int64)
    na, na_ok = _next_trade_price_at(stream, Side.ASK, times)
    nb, nb_ok = _next_trade_price_at(stream, Side.BID, times)
    keep = na_ok & nb_ok & _condition_mask(stream, _prefix_end_at_times(stream, times), cond)
    if not keep.any():
        raise EmptyConditioning(
            f"no grid point satisfies {cond.name!r} with both next-trade prices defined"
        )
    samples = (na[keep] - nb[keep]) * stream.price_step
    return _result_from_samples(samples, stream.tick)


def post_fill_gap(
    stream: EventStream,
    side: Side,
    cond: ConditioningEvent = ALL,
    *,
    window: tuple[int, int] | None = None,
) -> StatResult:
    """Mean of (fill price - next same-side fill price) over one side's trades.

    The comparison price is the first same-side trade strictly after the
    fill, so a fill is never compared with itself; the session's last fill
    on the side has no successor and is excluded. ``window`` restricts the
    averaged fills to ``[start_ns, end_ns)`` without restricting lookups.
    """
    trades = stream.side_trades(side)
    pos = trades.pos
    if window is not None:
        in_w = (trades.ts_ns >= window[0]) & (trades.ts_ns < window[1])
        pos = pos[in_w]
    strict = stream.next_ask_idx_strict if side == Side.ASK else stream.next_bid_idx_strict
    nxt = strict[pos]
    keep = nxt >= 0
    if pos.size:
        keep &= _condition_mask(stream, pos - 1, cond)
    if not keep.any():
        raise EmptyConditioning(
            f"no {side.name} fill satisfies {cond.name!r} with a later same-side fill"
        )
    samples = (
        stream.price_steps[pos[keep]] - stream.price_steps[nxt[keep]]
    ) * stream.price_step
    return _result_from_samples(samples, stream.tick)


DEFAULT_RESPONSE_DELTAS: np.ndarray = np.geomspace(0.01, 600.0, 30)
"""Default lags (seconds), log-spaced to span sub-second to many minutes."""


def _batch_stderr(samples: np.ndarray, block_len: int) -> float:
    """Standard error of the mean from batch means over time-ordered blocks.

    ``block_len`` should cover the dependence horizon of the samples; with
    ``block_len = 1`` this is the plain i.i.d. formula.
    """
    n = samples.size
    blocks = n // block_len
    if blocks < 2:
        return math.nan
    means = samples[: blocks * block_len].reshape(blocks, block_len).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(blocks))


def response_curve(
    stream: EventStream,
    side: Side,
    deltas_s: Sequence[float] | np.ndarray | None = None,
    *,
    window: tuple[int, int] | None = None,
) -> ResponseCurve:
    """Per-lag drift of the next same-side price after a fill.

    For each lag the average runs over fills where both the anchor (next
    same-side trade strictly after the fill) and the lagged lookup (first
    same-side trade at or after ``t + delta``) exist. A lag shorter than the
    gap to the next trade contributes exactly zero. Raises
    :class:`EmptyConditioning` when the side has no fills in the window.
    """
    deltas = np.asarray(DEFAULT_RESPONSE_DELTAS if deltas_s is None else deltas_s, dtype=np.float64)
    if deltas.size and (np.any(deltas <= 0) or np.any(np.diff(deltas) <= 0)):
        raise ValueError("deltas_s must be positive and strictly ascending")
    trades = stream.side_trades(side)
    pos = trades.pos
    sel_ts = trades.ts_ns
    if window is not None:
        in_w = (sel_ts >= window[0]) & (sel_ts < window[1])
        pos, sel_ts = pos[in_w], sel_ts[in_w]
    if pos.size == 0:
        raise EmptyConditioning(f"no {side.name} fills in the window")
    strict = stream.next_ask_idx_strict if side == Side.ASK else stream.next_bid_idx_strict
    nxt = strict[pos]
    base_ok = nxt >= 0
    base_price = stream.price_steps[np.clip(nxt, 0, None)]

    # Mean same-side inter-fill time sets the dependence horizon per lag.
    all_ts = trades.ts_ns
    if len(all_ts) > 1 and all_ts[-1] > all_ts[0]:
        fills_per_ns = (len(all_ts) - 1) / float(all_ts[-1] - all_ts[0])
    else:
        fills_per_ns = 0.0

    values = np.full(deltas.size, np.nan)
    counts = np.zeros(deltas.size, dtype=np.int64)
    stderrs = np.full(deltas.size, np.nan)
    for k, d in enumerate(deltas):
        lag_ns = int(round(d * 1e9))
        lagged, lag_ok = _next_trade_price_at(stream, side, sel_ts + lag_ns)
        keep = base_ok & lag_ok
        n = int(keep.sum())
        counts[k] = n
        if n:
            samples = (lagged[keep] - base_price[keep]) * stream.price_step
            values[k] = float(samples.mean())
            block_len = max(1, math.ceil(2.0 * lag_ns * fills_per_ns))
            stderrs[k] = _batch_stderr(samples, block_len)
    return ResponseCurve(side=side, deltas_s=deltas, values=values, counts=counts, stderrs=stderrs)
