"""Madhavan-Richardson-Roomans (MRR) order-flow model.

Discrete-time fair market: the n-th market order is a unit-volume buy
(sign +1) or sell (sign -1), signs follow an AR(1)-type law
``E[eps_n | past] = rho * eps_{n-1}``, and the fair price moves with the
surprise of the order flow,

    p_{n+1} - p_n = theta * (eps_n - rho * eps_{n-1}) + zeta_n,

which makes ``p`` a martingale. Quotes are set so a resting order at the
touch has zero expected gain once filled:

    ask_n = p_n + theta * (1 - rho * eps_{n-1})
    bid_n = p_n - theta * (1 + rho * eps_{n-1})

so the spread is identically ``2 * theta``.

Simulation runs on an integer price lattice. The default lattice step is
``theta / 2**20``; scaling by a power of two is exact in binary floating
point, so the constant-spread identity survives the currency conversion
bit-for-bit. The optional noise term ``zeta`` is Normal(0, noise_std**2),
snapped to the lattice.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .book import EventKind, EventStream, Side
from .errors import DepthTooSmall

__all__ = [
    "LATTICE_STEPS_PER_THETA",
    "MrrParams",
    "MrrState",
    "MrrPath",
    "OracleResult",
    "sign_prob_up",
    "quote",
    "step",
    "simulate",
    "average_market_impact",
    "next_trade_price_expectation",
    "next_ask_expectation",
    "next_bid_expectation",
    "required_depth",
]

LATTICE_STEPS_PER_THETA = 1 << 20
"""Default lattice resolution: price steps per unit of theta (a power of two)."""


@dataclass(frozen=True)
class MrrParams:
    """Model parameters.

    rho: sign autocorrelation, 0 < rho < 1.
    theta: impact scale (half the spread), theta > 0, in currency.
    p0: initial fair price, currency.
    noise_std: standard deviation of the exogenous price noise, >= 0.
    seed: RNG seed for :func:`simulate`.
    """

    rho: float
    theta: float
    p0: float = 100.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie strictly in (0, 1), got {self.rho!r}")
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta!r}")
        if self.noise_std < 0.0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std!r}")


@dataclass
class MrrState:
    """Evolving state: previous order sign, current fair price, step count."""

    eps_prev: int
    p: float
    n: int = 0

    def __post_init__(self):
        if self.eps_prev not in (-1, 1):
            raise ValueError(f"eps_prev must be -1 or +1, got {self.eps_prev!r}")


def sign_prob_up(rho: float, eps_prev: int) -> float:
    """Probability that the next order is a buy, given the previous sign."""
    return (1.0 + rho * eps_prev) / 2.0


def quote(params: MrrParams, state: MrrState) -> tuple[float, float]:
    """Zero-expected-gain quotes for the coming order: ``(ask, bid)``."""
    ask = state.p + params.theta * (1.0 - params.rho * state.eps_prev)
    bid = state.p + params.theta * (-1.0 - params.rho * state.eps_prev)
    return ask, bid


def step(
    params: MrrParams, state: MrrState, rng: np.random.Generator
) -> tuple[MrrState, tuple[Side, float]]:
    """Advance one order: draw the sign, trade at the quote, move the fair price.

    Returns the new state and the emitted trade as ``(side, price)``. The
    trade executes at the pre-draw ask for a buy, bid for a sell.
    """
    eps_n = 1 if rng.random() < sign_prob_up(params.rho, state.eps_prev) else -1
    ask, bid = quote(params, state)
    zeta = rng.normal(0.0, params.noise_std) if params.noise_std > 0.0 else 0.0
    p_next = state.p + params.theta * (eps_n - params.rho * state.eps_prev) + zeta
    trade = (Side.ASK, ask) if eps_n == 1 else (Side.BID, bid)
    return MrrState(eps_prev=eps_n, p=p_next, n=state.n + 1), trade


def average_market_impact(params: MrrParams, eps_prev: int) -> tuple[float, float]:
    """Expected fair-price move conditional on the next order's side.

    Returns ``(impact_if_buy, impact_if_sell)`` relative to the current fair
    price; these equal the quote offsets, so their difference is the spread
    ``2 * theta``.
    """
    ask_impact = params.theta * (1.0 - params.rho * eps_prev)
    bid_impact = -params.theta * (1.0 + params.rho * eps_prev)
    return ask_impact, bid_impact


# ----------------------------------------------------------------------
# Path simulation
# ----------------------------------------------------------------------


@dataclass(eq=False)
class MrrPath:
    """One simulated path plus its emitted L1 event stream.

    Integer arrays live on the price lattice (``* price_step`` gives
    currency). ``fair_steps[n]`` is the fair price entering step n, and
    ``ask_steps[n] - bid_steps[n]`` equals ``spread_steps`` on every step by
    construction.
    """

    params: MrrParams
    price_step: float
    tick: float
    spread_steps: int
    eps_init: int
    eps: np.ndarray
    fair_steps: np.ndarray
    ask_steps: np.ndarray
    bid_steps: np.ndarray
    stream: EventStream

    @property
    def n_steps(self) -> int:
        return len(self.eps)

    @cached_property
    def fair(self) -> np.ndarray:
        return self.fair_steps * self.price_step

    @cached_property
    def ask(self) -> np.ndarray:
        return self.ask_steps * self.price_step

    @cached_property
    def bid(self) -> np.ndarray:
        return self.bid_steps * self.price_step

    @cached_property
    def trade_prices(self) -> np.ndarray:
        return np.where(self.eps == 1, self.ask_steps, self.bid_steps) * self.price_step

    @cached_property
    def eps_prev(self) -> np.ndarray:
        """Sign preceding each step: ``eps_init`` then ``eps[:-1]``."""
        return np.concatenate(([self.eps_init], self.eps[:-1])).astype(np.int8)


def simulate(
    params: MrrParams,
    n_steps: int,
    *,
    trade_interval_ns: int = 1_000_000_000,
    tick: float | None = None,
    price_step: float | None = None,
) -> MrrPath:
    """Simulate ``n_steps`` orders, deterministically for a given seed.

    The initial sign is drawn uniformly (the stationary law of the sign
    chain). Each step emits a unit-volume trade at the standing quote
    followed by a quote update, one trade per ``trade_interval_ns``. The
    sign path is generated from i.i.d. flip indicators: the chain keeps its
    sign with probability ``(1 + rho) / 2`` regardless of state, which is
    what lets the whole path vectorize.

    ``tick`` defaults to ``theta / 8`` (the emitted stream needs a tick for
    threshold reporting; the model itself has none) and ``price_step`` to
    ``theta / 2**20``.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps!r}")
    if trade_interval_ns < 1:
        raise ValueError(f"trade_interval_ns must be >= 1, got {trade_interval_ns!r}")
    step_c = params.theta / LATTICE_STEPS_PER_THETA if price_step is None else float(price_step)
    tick_c = params.theta / 8.0 if tick is None else float(tick)

    off_plus = int(np.rint(params.theta * (1.0 - params.rho) / step_c))
    off_minus = int(np.rint(params.theta * (1.0 + params.rho) / step_c))
    spread_steps = int(np.rint(2.0 * params.theta / step_c))

    rng = np.random.default_rng(params.seed)
    eps_init = 1 if rng.random() < 0.5 else -1
    flips = rng.random(n_steps) < (1.0 - params.rho) / 2.0
    eps = (eps_init * np.cumprod(np.where(flips, -1, 1))).astype(np.int8)
    eps_prev_ext = np.concatenate(([eps_init], eps)).astype(np.int8)

    ask_off = np.where(eps_prev_ext == 1, off_plus, off_minus).astype(np.int64)
    inc = ask_off[:-1] - spread_steps * (eps == -1).astype(np.int64)
    if params.noise_std > 0.0:
        inc = inc + np.rint(
            rng.normal(0.0, params.noise_std, n_steps) / step_c
        ).astype(np.int64)

    p0_steps = int(np.rint(params.p0 / step_c))
    fair_ext = p0_steps + np.concatenate(([0], np.cumsum(inc)))
    ask_ext = fair_ext + ask_off
    bid_ext = ask_ext - spread_steps
    trade_steps = np.where(eps == 1, ask_ext[:-1], bid_ext[:-1])

    stream = _emit_stream(
        params, eps, trade_steps, bid_ext, ask_ext,
        trade_interval_ns=trade_interval_ns, tick=tick_c, price_step=step_c,
    )
    return MrrPath(
        params=params,
        price_step=step_c,
        tick=tick_c,
        spread_steps=spread_steps,
        eps_init=eps_init,
        eps=eps,
        fair_steps=fair_ext[:-1],
        ask_steps=ask_ext[:-1],
        bid_steps=bid_ext[:-1],
        stream=stream,
    )


def _emit_stream(
    params: MrrParams,
    eps: np.ndarray,
    trade_steps: np.ndarray,
    bid_ext: np.ndarray,
    ask_ext: np.ndarray,
    *,
    trade_interval_ns: int,
    tick: float,
    price_step: float,
) -> EventStream:
    """Interleave the path into events: opening quotes, then (trade, requote) pairs.

    Trade n prints at ``(n + 1) * trade_interval_ns`` against the quotes
    posted by the previous event; the requote at the same timestamp (next
    seq) moves the book to the quotes for step n + 1.
    """
    n = len(eps)
    m = 2 * n + 1
    ts = np.empty(m, np.int64)
    kind = np.empty(m, np.int8)
    side = np.zeros(m, np.int8)
    price = np.zeros(m, np.int64)
    volume = np.full(m, np.nan)
    bid = np.empty(m, np.int64)
    ask = np.empty(m, np.int64)

    t_trade = (np.arange(n, dtype=np.int64) + 1) * trade_interval_ns
    ts[0] = 0
    ts[1::2] = t_trade
    ts[2::2] = t_trade
    kind[0] = EventKind.BOOK_UPDATE
    kind[1::2] = EventKind.TRADE
    kind[2::2] = EventKind.BOOK_UPDATE
    side[1::2] = eps
    price[1::2] = trade_steps
    volume[1::2] = 1.0
    bid[0], ask[0] = bid_ext[0], ask_ext[0]
    bid[1::2], ask[1::2] = bid_ext[:-1], ask_ext[:-1]
    bid[2::2], ask[2::2] = bid_ext[1:], ask_ext[1:]

    return EventStream(
        asset_id=f"mrr-seed{params.seed}",
        tick=tick,
        price_step=price_step,
        ts_ns=ts,
        seq=np.arange(m, dtype=np.int64),
        kind=kind,
        side=side,
        price_steps=price,
        volume=volume,
        bid_steps=bid,
        ask_steps=ask,
    )


# ----------------------------------------------------------------------
# Enumeration oracle for the next-trade price expectation
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    """Partial expectation of (next same-side trade price - fair price).

    ``value`` sums the contributions of every stop time within ``depth``
    steps; ``tail_bound`` rigorously dominates the magnitude of everything
    beyond. The model predicts a total of exactly zero, so a correct run has
    ``|value| <= tail_bound`` up to float roundoff in the summation (around
    1e-16 times theta; relevant only when the tail is smaller than that).
    """

    value: float
    tail_bound: float
    depth: int


def next_trade_price_expectation(
    params: MrrParams,
    eps_prev: int,
    depth: int,
    side: Side = Side.ASK,
    *,
    max_tail: float | None = None,
) -> OracleResult:
    """Enumerate E[next ``side`` trade price] - p by stepping the sign chain.

    Conditioned on the first ``side`` order arriving at step j, the
    intermediate signs are all the opposite sign, so the fair-price drift up
    to the stop is deterministic; the enumeration walks j = 0..depth-1,
    accumulating stop probability times the quote offset at the stop. The
    tail bound is ``P(no stop within depth)`` times the expected magnitude of
    the quote offset beyond the horizon (drift accumulated so far, plus the
    mean number of further steps, geometric with stay probability
    ``(1 + rho) / 2``, times the per-step drift, plus the final quote
    offset).

    Requires ``noise_std == 0``. When ``max_tail`` is given and the tail
    bound exceeds it, raises :class:`DepthTooSmall` carrying the depth that
    would suffice.
    """
    if params.noise_std != 0.0:
        raise ValueError("the enumeration oracle requires noise_std == 0")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth!r}")
    if eps_prev not in (-1, 1):
        raise ValueError(f"eps_prev must be -1 or +1, got {eps_prev!r}")
    rho, theta = params.rho, params.theta
    s = int(side)

    off = 0.0  # fair-price drift accumulated along the no-stop path
    e = float(eps_prev)
    total = 0.0
    p_surv = 1.0
    for _ in range(depth):
        p_stop = (1.0 + rho * e * s) / 2.0
        stop_quote = off + s * theta * (1.0 - rho * s * e)
        total += p_surv * p_stop * stop_quote
        off += theta * (-s - rho * e)
        p_surv *= (1.0 - rho * e * s) / 2.0
        e = -s

    tail = _tail_bound(params, s, abs(off), p_surv)
    if max_tail is not None and tail > max_tail:
        raise DepthTooSmall(
            f"depth {depth} leaves tail bound {tail:.3e} > {max_tail:.3e}",
            required_depth=required_depth(params, eps_prev, max_tail, side=side),
        )
    return OracleResult(value=total, tail_bound=tail, depth=depth)


def _tail_bound(params: MrrParams, s: int, abs_off: float, p_surv: float) -> float:
    # Beyond the horizon the survivors keep drifting theta*(1 - rho) per step
    # away; the number of extra steps is geometric with stay probability
    # q = (1 + rho) / 2, mean q / (1 - q), and the stop adds at most
    # theta * (1 + rho).
    rho, theta = params.rho, params.theta
    q = (1.0 + rho) / 2.0
    expected_extra_drift = theta * (1.0 - rho) * q / (1.0 - q)
    return p_surv * (abs_off + theta * (1.0 + rho) + expected_extra_drift)


def required_depth(
    params: MrrParams,
    eps_prev: int,
    max_tail: float,
    side: Side = Side.ASK,
    *,
    cap: int = 10_000_000,
) -> int | None:
    """Smallest depth whose tail bound is at most ``max_tail`` (None if > cap)."""
    rho, theta = params.rho, params.theta
    s = int(side)
    e = float(eps_prev)
    q = (1.0 + rho) / 2.0

    def bound(d: int) -> float:
        # Closed form of the loop's terminal state after d steps.
        if d == 0:
            p_surv, abs_off = 1.0, 0.0
        else:
            p_surv = (1.0 - rho * e * s) / 2.0 * q ** (d - 1)
            abs_off = theta * abs(-s - rho * e) + (d - 1) * theta * (1.0 - rho)
        return _tail_bound(params, s, abs_off, p_surv)

    lo, hi = 1, 1
    while bound(hi) > max_tail:
        hi *= 2
        if hi > cap:
            return None
    while lo < hi:
        mid = (lo + hi) // 2
        if bound(mid) <= max_tail:
            hi = mid
        else:
            lo = mid + 1
    return lo


def next_ask_expectation(
    params: MrrParams, eps_prev: int, depth: int, *, max_tail: float | None = None
) -> OracleResult:
    """E[next buy execution price] - p, by enumeration."""
    return next_trade_price_expectation(params, eps_prev, depth, Side.ASK, max_tail=max_tail)


def next_bid_expectation(
    params: MrrParams, eps_prev: int, depth: int, *, max_tail: float | None = None
) -> OracleResult:
    """E[next sell execution price] - p, by enumeration."""
    return next_trade_price_expectation(params, eps_prev, depth, Side.BID, max_tail=max_tail)
