"""L1 order-book event model: market events, event streams, next-trade lookups.

An :class:`EventStream` is the columnar record of one asset-session: trade
prints and best-quote updates ordered by ``(ts_ns, seq)``, where ``seq``
breaks same-timestamp ties. Prices are held internally as integer multiples
of a configurable ``price_step`` so that price equality and tick-threshold
comparisons are exact; currency views are derived on demand.

A trade's side names the book side it consumes: ``Side.ASK`` is a buy market
order lifting the ask, ``Side.BID`` a sell market order hitting the bid.
Quote columns describe the book immediately *after* the event applies, so the
quote prevailing just before a trade is the state carried by the previous
event.

Streams are immutable after construction and safe to share read-only across
workers; all derived arrays are computed once and frozen.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (
    CrossedBook,
    CrossedQuote,
    OrderingError,
    PriceOffGrid,
    TradeExceedsLiquidity,
)

__all__ = [
    "NO_TRADE",
    "Side",
    "EventKind",
    "MarketEvent",
    "EventStream",
    "CumulativeLiquidity",
    "SideTrades",
    "apply_event",
    "mid_price",
    "compute_next_trade_indices",
    "quantize_prices",
    "first_trade_price_mismatch",
]

NO_TRADE = -1
"""Sentinel in next-trade index arrays: no qualifying trade exists."""

GRID_TOLERANCE = 1e-3
"""Maximum residual, in price-step units, tolerated when snapping to the grid."""


class Side(IntEnum):
    """Book side consumed by a market order.

    ``ASK``: a buy market order executing against resting sell liquidity.
    ``BID``: a sell market order executing against resting buy liquidity.
    """

    ASK = 1
    BID = -1


class EventKind(IntEnum):
    BOOK_UPDATE = 0
    TRADE = 1


@dataclass(frozen=True)
class MarketEvent:
    """One L1 event: a trade print or a best-quote update.

    ``best_bid`` / ``best_ask`` give the book state immediately after the
    event applies. Trades carry a side, an execution price and a positive
    volume; on a well-formed feed the execution price equals the best quote
    on the consumed side just before the trade. Quote updates leave ``side``,
    ``price`` and ``volume`` unset.
    """

    ts_ns: int
    seq: int
    kind: EventKind
    best_bid: float
    best_ask: float
    side: Side | None = None
    price: float | None = None
    volume: float | None = None


class SideTrades(NamedTuple):
    """Trades of one side, in stream order: event positions, times, prices."""

    pos: np.ndarray
    ts_ns: np.ndarray
    price_steps: np.ndarray


def quantize_prices(values, price_step: float, what: str = "price") -> np.ndarray:
    """Snap currency values to integer multiples of ``price_step``.

    Raises :class:`PriceOffGrid` if any value sits further than
    ``GRID_TOLERANCE`` steps from the nearest grid point.
    """
    arr = np.asarray(values, dtype=np.float64)
    scaled = arr / price_step
    snapped = np.rint(scaled)
    bad = ~(np.abs(scaled - snapped) <= GRID_TOLERANCE)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise PriceOffGrid(
            f"{what}[{i}] = {float(arr.flat[i])!r} is not a multiple of price_step={price_step!r}"
        )
    return snapped.astype(np.int64)


def compute_next_trade_indices(kind, side):
    """Next-trade event indices, per side, for every position of a stream.

    Returns ``(next_ask, next_bid, next_ask_strict, next_bid_strict)``.
    ``next_ask[i]`` is the index of the first ask-side trade at or after
    position ``i`` (an event that is itself an ask trade is its own next
    ask); the strict variants skip position ``i``. Positions with no later
    qualifying trade hold :data:`NO_TRADE`. Position order coincides with
    ``(ts_ns, seq)`` order for a sorted stream, so "strictly after" includes
    same-timestamp events with a higher ``seq``.
    """
    kind = np.asarray(kind)
    side = np.asarray(side)
    n = len(kind)
    idx = np.arange(n, dtype=np.int64)
    out = {}
    for s in (Side.ASK, Side.BID):
        cand = np.where((kind == EventKind.TRADE) & (side == int(s)), idx, n)
        if n:
            incl = np.minimum.accumulate(cand[::-1])[::-1]
        else:
            incl = cand
        incl = np.where(incl == n, NO_TRADE, incl)
        strict = np.concatenate([incl[1:], [NO_TRADE]]) if n else incl.copy()
        out[s] = (incl, strict)
    return out[Side.ASK][0], out[Side.BID][0], out[Side.ASK][1], out[Side.BID][1]


def _first_true(mask) -> int:
    return int(np.flatnonzero(mask)[0])


class EventStream:
    """Immutable columnar record of one asset-session.

    Construction validates ordering and quote sanity, quantizes nothing (all
    prices arrive as integer step counts) and precomputes the four next-trade
    index arrays. Use :meth:`from_events` to build from
    :class:`MarketEvent` objects with currency prices.

    Trade execution prices are *not* checked against prevailing quotes:
    streams that violate the executes-at-the-touch convention are exactly the
    kind of data the statistics battery is meant to flag. Use
    :func:`first_trade_price_mismatch` as a diagnostic.
    """

    def __init__(
        self,
        *,
        asset_id: str,
        tick: float,
        price_step: float,
        ts_ns,
        seq,
        kind,
        side,
        price_steps,
        volume,
        bid_steps,
        ask_steps,
    ):
        if not tick > 0:
            raise ValueError(f"tick must be positive, got {tick!r}")
        if not price_step > 0:
            raise ValueError(f"price_step must be positive, got {price_step!r}")
        ratio = tick / price_step
        if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
            raise ValueError(
                f"price_step {price_step!r} does not divide tick {tick!r}"
            )
        self.asset_id = str(asset_id)
        self.tick = float(tick)
        self.price_step = float(price_step)
        self.tick_steps = int(round(ratio))

        self.ts_ns = np.asarray(ts_ns, dtype=np.int64)
        self.seq = np.asarray(seq, dtype=np.int64)
        self.kind = np.asarray(kind, dtype=np.int8)
        self.side = np.asarray(side, dtype=np.int8)
        self.price_steps = np.asarray(price_steps, dtype=np.int64)
        self.volume = np.asarray(volume, dtype=np.float64)
        self.bid_steps = np.asarray(bid_steps, dtype=np.int64)
        self.ask_steps = np.asarray(ask_steps, dtype=np.int64)

        n = len(self.ts_ns)
        for name in ("seq", "kind", "side", "price_steps", "volume", "bid_steps", "ask_steps"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has length {len(getattr(self, name))}, expected {n}")

        self._validate()

        (
            self.next_ask_idx,
            self.next_bid_idx,
            self.next_ask_idx_strict,
            self.next_bid_idx_strict,
        ) = compute_next_trade_indices(self.kind, self.side)

        for name in (
            "ts_ns", "seq", "kind", "side", "price_steps", "volume",
            "bid_steps", "ask_steps", "next_ask_idx", "next_bid_idx",
            "next_ask_idx_strict", "next_bid_idx_strict",
        ):
            getattr(self, name).setflags(write=False)

    def _validate(self) -> None:
        n = len(self.ts_ns)
        if n > 1:
            d_ts = np.diff(self.ts_ns)
            d_seq = np.diff(self.seq)
            bad = ~((d_ts > 0) | ((d_ts == 0) & (d_seq > 0)))
            if bad.any():
                i = _first_true(bad)
                raise OrderingError(
                    f"events {i} and {i + 1} are not strictly increasing in (ts_ns, seq)"
                )
        crossed = self.ask_steps <= self.bid_steps
        if crossed.any():
            i = _first_true(crossed)
            raise CrossedQuote(
                f"event {i}: best_ask ({int(self.ask_steps[i])} steps) <= "
                f"best_bid ({int(self.bid_steps[i])} steps)"
            )
        trades = self.kind == EventKind.TRADE
        if trades.any():
            bad_side = trades & ~np.isin(self.side, (int(Side.ASK), int(Side.BID)))
            if bad_side.any():
                raise ValueError(f"trade event {_first_true(bad_side)} has no side")
            vol = self.volume
            bad_vol = trades & ~(np.isfinite(vol) & (vol > 0))
            if bad_vol.any():
                raise ValueError(
                    f"trade event {_first_true(bad_vol)} has non-positive volume"
                )
        books = ~trades
        if (books & (self.side != 0)).any():
            raise ValueError(
                f"book update {_first_true(books & (self.side != 0))} carries a side"
            )

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    @classmethod
    def from_events(
        cls,
        events: Iterable[MarketEvent],
        *,
        asset_id: str,
        tick: float,
        price_step: float,
    ) -> "EventStream":
        """Build a stream from event objects, snapping prices to the grid."""
        evs = list(events)
        n = len(evs)
        ts = np.fromiter((e.ts_ns for e in evs), np.int64, n)
        seq = np.fromiter((e.seq for e in evs), np.int64, n)
        kind = np.fromiter((int(e.kind) for e in evs), np.int8, n)
        side = np.fromiter((0 if e.side is None else int(e.side) for e in evs), np.int8, n)
        volume = np.fromiter(
            (np.nan if e.volume is None else float(e.volume) for e in evs), np.float64, n
        )
        price_c = np.fromiter(
            (0.0 if e.price is None else float(e.price) for e in evs), np.float64, n
        )
        bid_c = np.fromiter((e.best_bid for e in evs), np.float64, n)
        ask_c = np.fromiter((e.best_ask for e in evs), np.float64, n)
        return cls(
            asset_id=asset_id,
            tick=tick,
            price_step=price_step,
            ts_ns=ts,
            seq=seq,
            kind=kind,
            side=side,
            price_steps=quantize_prices(price_c, price_step, "price"),
            volume=volume,
            bid_steps=quantize_prices(bid_c, price_step, "best_bid"),
            ask_steps=quantize_prices(ask_c, price_step, "best_ask"),
        )

    # ------------------------------------------------------------------
    # Basic views
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.ts_ns)

    @property
    def session_start_ns(self) -> int | None:
        return int(self.ts_ns[0]) if len(self) else None

    @property
    def session_end_ns(self) -> int | None:
        return int(self.ts_ns[-1]) if len(self) else None

    @cached_property
    def trade_mask(self) -> np.ndarray:
        m = self.kind == EventKind.TRADE
        m.setflags(write=False)
        return m

    @cached_property
    def best_bids(self) -> np.ndarray:
        out = self.bid_steps * self.price_step
        out.setflags(write=False)
        return out

    @cached_property
    def best_asks(self) -> np.ndarray:
        out = self.ask_steps * self.price_step
        out.setflags(write=False)
        return out

    @cached_property
    def prices(self) -> np.ndarray:
        """Execution prices in currency; NaN on book-update rows."""
        out = np.where(self.trade_mask, self.price_steps * self.price_step, np.nan)
        out.setflags(write=False)
        return out

    @cached_property
    def mid2_steps(self) -> np.ndarray:
        """Twice the mid price in steps (kept doubled so it stays integer)."""
        out = self.bid_steps + self.ask_steps
        out.setflags(write=False)
        return out

    @cached_property
    def mids(self) -> np.ndarray:
        out = self.mid2_steps * (self.price_step / 2.0)
        out.setflags(write=False)
        return out

    def event(self, i: int) -> MarketEvent:
        """Materialize one row as a :class:`MarketEvent`."""
        i = int(i)
        is_trade = bool(self.trade_mask[i])
        return MarketEvent(
            ts_ns=int(self.ts_ns[i]),
            seq=int(self.seq[i]),
            kind=EventKind(int(self.kind[i])),
            best_bid=float(self.best_bids[i]),
            best_ask=float(self.best_asks[i]),
            side=Side(int(self.side[i])) if is_trade else None,
            price=float(self.price_steps[i] * self.price_step) if is_trade else None,
            volume=float(self.volume[i]) if is_trade else None,
        )

    # ------------------------------------------------------------------
    # Derived lookup tables
    # ------------------------------------------------------------------

    @cached_property
    def _ask_trades(self) -> SideTrades:
        return self._collect_side(Side.ASK)

    @cached_property
    def _bid_trades(self) -> SideTrades:
        return self._collect_side(Side.BID)

    def _collect_side(self, side: Side) -> SideTrades:
        pos = np.flatnonzero(self.trade_mask & (self.side == int(side)))
        return SideTrades(pos, self.ts_ns[pos], self.price_steps[pos])

    def side_trades(self, side: Side) -> SideTrades:
        """All trades of one side, in stream order."""
        return self._ask_trades if side == Side.ASK else self._bid_trades

    @cached_property
    def last_trade_idx_upto(self) -> np.ndarray:
        """For each position j, the index of the last trade at or before j (-1: none)."""
        n = len(self)
        cand = np.where(self.trade_mask, np.arange(n, dtype=np.int64), -1)
        out = np.maximum.accumulate(cand) if n else cand
        out.setflags(write=False)
        return out

    @cached_property
    def last_middir_upto(self) -> np.ndarray:
        """Direction of the last mid-price change at or before each position.

        A mid move is dated at the event whose application changes the mid
        value. Values are +1 (up), -1 (down) or 0 (no change seen yet).
        """
        n = len(self)
        dirs = np.zeros(n, dtype=np.int8)
        if n > 1:
            dirs[1:] = np.sign(np.diff(self.mid2_steps)).astype(np.int8)
        moved = np.where(dirs != 0, np.arange(n, dtype=np.int64), -1)
        last_move = np.maximum.accumulate(moved) if n else moved
        out = np.where(last_move >= 0, dirs[np.clip(last_move, 0, None)], 0).astype(np.int8)
        out.setflags(write=False)
        return out

    # ------------------------------------------------------------------
    # Derived streams / comparisons
    # ------------------------------------------------------------------

    def with_shifted_trades(self, side: Side, delta_steps: int) -> "EventStream":
        """Copy of the stream with one side's execution prices shifted.

        Quotes are left untouched, so the result deliberately breaks the
        executes-at-the-touch convention. Useful for checking that the
        statistics battery detects unfair pricing.
        """
        prices = self.price_steps.copy()
        mask = self.trade_mask & (self.side == int(side))
        prices[mask] += int(delta_steps)
        return EventStream(
            asset_id=self.asset_id,
            tick=self.tick,
            price_step=self.price_step,
            ts_ns=self.ts_ns,
            seq=self.seq,
            kind=self.kind,
            side=self.side,
            price_steps=prices,
            volume=self.volume,
            bid_steps=self.bid_steps,
            ask_steps=self.ask_steps,
        )

    def equals(self, other: "EventStream") -> bool:
        """Exact equality of metadata and all event columns."""
        if not isinstance(other, EventStream):
            return False
        return (
            self.asset_id == other.asset_id
            and self.tick == other.tick
            and self.price_step == other.price_step
            and np.array_equal(self.ts_ns, other.ts_ns)
            and np.array_equal(self.seq, other.seq)
            and np.array_equal(self.kind, other.kind)
            and np.array_equal(self.side, other.side)
            and np.array_equal(self.price_steps, other.price_steps)
            and np.array_equal(self.volume, other.volume, equal_nan=True)
            and np.array_equal(self.bid_steps, other.bid_steps)
            and np.array_equal(self.ask_steps, other.ask_steps)
        )

    def __repr__(self) -> str:
        return (
            f"EventStream(asset_id={self.asset_id!r}, n_events={len(self)}, "
            f"tick={self.tick!r}, price_step={self.price_step!r})"
        )


def first_trade_price_mismatch(stream: EventStream) -> int | None:
    """Index of the first trade whose price differs from the prevailing quote.

    The prevailing quote is the state carried by the previous event on the
    trade's consumed side. Returns ``None`` when every trade executes at the
    touch (or when there is nothing to check).
    """
    pos = np.flatnonzero(stream.trade_mask)
    pos = pos[pos > 0]
    if pos.size == 0:
        return None
    prevailing = np.where(
        stream.side[pos] == int(Side.ASK),
        stream.ask_steps[pos - 1],
        stream.bid_steps[pos - 1],
    )
    bad = stream.price_steps[pos] != prevailing
    if bad.any():
        return int(pos[_first_true(bad)])
    return None


def mid_price(ev: MarketEvent) -> float:
    """Mid price implied by an event's post-update quotes."""
    return (ev.best_bid + ev.best_ask) / 2.0


# ----------------------------------------------------------------------
# Resting-liquidity book
# ----------------------------------------------------------------------


class CumulativeLiquidity:
    """Resting depth per book side, for streams that carry depth data.

    Levels are stored as ``price -> level volume`` maps; cumulative views
    (total volume at or better than a price) are derived on demand. The ask
    cumulative map is nondecreasing in price, the bid cumulative map
    nondecreasing as price decreases. Most estimators in this package need
    only L1 data; this class serves replay checks on depth feeds.
    """

    def __init__(self, ask_levels: Mapping[float, float] | None = None,
                 bid_levels: Mapping[float, float] | None = None):
        self.ask_levels: dict[float, float] = dict(ask_levels or {})
        self.bid_levels: dict[float, float] = dict(bid_levels or {})
        self._check()

    def _check(self) -> None:
        for levels, label in ((self.ask_levels, "ask"), (self.bid_levels, "bid")):
            for p, v in levels.items():
                if v < 0:
                    raise ValueError(f"negative {label} volume {v!r} at price {p!r}")
        ba, bb = self.best_ask(), self.best_bid()
        if ba is not None and bb is not None and ba <= bb:
            raise CrossedBook(f"best_ask {ba!r} <= best_bid {bb!r}")

    @classmethod
    def from_cumulative(
        cls,
        asks: Mapping[float, float] | None = None,
        bids: Mapping[float, float] | None = None,
    ) -> "CumulativeLiquidity":
        """Build from cumulative maps (volume at or better than each price)."""
        ask_levels: dict[float, float] = {}
        prev = 0.0
        for p in sorted(asks or {}):
            cum = float(asks[p])
            if cum < prev:
                raise ValueError(f"ask cumulative volume decreases at price {p!r}")
            ask_levels[p] = cum - prev
            prev = cum
        bid_levels: dict[float, float] = {}
        prev = 0.0
        for p in sorted(bids or {}, reverse=True):
            cum = float(bids[p])
            if cum < prev:
                raise ValueError(f"bid cumulative volume decreases at price {p!r}")
            bid_levels[p] = cum - prev
            prev = cum
        return cls(ask_levels, bid_levels)

    def copy(self) -> "CumulativeLiquidity":
        return CumulativeLiquidity(self.ask_levels, self.bid_levels)

    def best_ask(self) -> float | None:
        live = [p for p, v in self.ask_levels.items() if v > 0]
        return min(live) if live else None

    def best_bid(self) -> float | None:
        live = [p for p, v in self.bid_levels.items() if v > 0]
        return max(live) if live else None

    def cumulative_asks(self) -> dict[float, float]:
        out, total = {}, 0.0
        for p in sorted(self.ask_levels):
            if self.ask_levels[p] > 0:
                total += self.ask_levels[p]
                out[p] = total
        return out

    def cumulative_bids(self) -> dict[float, float]:
        out, total = {}, 0.0
        for p in sorted(self.bid_levels, reverse=True):
            if self.bid_levels[p] > 0:
                total += self.bid_levels[p]
                out[p] = total
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, CumulativeLiquidity):
            return NotImplemented
        return (
            self.cumulative_asks() == other.cumulative_asks()
            and self.cumulative_bids() == other.cumulative_bids()
        )


def apply_event(book: CumulativeLiquidity, ev: MarketEvent) -> CumulativeLiquidity:
    """Apply one event to a depth book, returning a new book.

    Trades consume volume from the front of their side, respecting price
    priority: an ask-side trade eats the lowest ask levels first. Raises
    :class:`TradeExceedsLiquidity` when a trade is larger than the side's
    total resting volume, and :class:`CrossedBook` when a quote update
    asserts ``best_ask <= best_bid``.
    """
    out = book.copy()
    if ev.kind == EventKind.BOOK_UPDATE:
        if ev.best_ask <= ev.best_bid:
            raise CrossedBook(
                f"book update at ts {ev.ts_ns}: best_ask {ev.best_ask!r} <= best_bid {ev.best_bid!r}"
            )
        return out
    if ev.volume is None or ev.side is None:
        raise ValueError("trade event requires side and volume")
    remaining = float(ev.volume)
    if ev.side == Side.ASK:
        levels, order = out.ask_levels, sorted(out.ask_levels)
    else:
        levels, order = out.bid_levels, sorted(out.bid_levels, reverse=True)
    for p in order:
        if remaining <= 0:
            break
        take = min(levels[p], remaining)
        levels[p] -= take
        remaining -= take
        if levels[p] <= 0:
            del levels[p]
    if remaining > 0:
        raise TradeExceedsLiquidity(
            f"trade volume {ev.volume!r} exceeds resting {ev.side.name} liquidity"
        )
    return out
