"""Tick-data ingestion: CSV sessions and asset configuration files.

One file holds one asset-session in a fixed, vendor-neutral schema
(header mandatory, comma separated, UTF-8):

    ts_ns,seq,kind,side,price,volume,best_bid,best_ask

``kind`` is ``T`` (trade) or ``B`` (book update); ``side`` is ``A`` (buy,
lifts the ask), ``B`` (sell, hits the bid) or ``-`` for book updates, whose
``price`` and ``volume`` fields stay empty. Timestamps are integer
nanoseconds since midnight UTC of the session date. Prices are decimal
strings exact on the asset's price-step grid, which keeps a save/load round
trip bit-exact.

Asset metadata lives in a key=value text file::

    tick=0.01
    price_step=0.0001
    trim_head_s=3600
    trim_tail_s=3600
    grid_dt_s=10

plus optional ``asset_id``, ``session_start_s`` and ``session_end_s``
(seconds since midnight); records outside the session bounds are dropped at
load time. Head/tail trims are *not* applied to the events: they
parameterize the sampling grid and estimator windows via
:class:`~fairmarket.stats.GridSpec`, so trimming happens in exactly one
place.

Files are independent; loaders share no mutable state and can run in
parallel.
"""
from __future__ import annotations

import csv
import decimal
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .book import EventKind, EventStream, Side
from .errors import CrossedQuote, OrderingError, ParseError, PriceOffGrid
from .stats import GridSpec, build_grid, trim_window

__all__ = [
    "SCHEMA_COLUMNS",
    "AssetConfig",
    "load_asset_config",
    "save_asset_config",
    "load_session",
    "save_session",
    "GridSpec",
    "build_grid",
    "trim_window",
]

SCHEMA_COLUMNS = ("ts_ns", "seq", "kind", "side", "price", "volume", "best_bid", "best_ask")

_CONFIG_FLOAT_KEYS = {"tick", "price_step", "trim_head_s", "trim_tail_s", "grid_dt_s",
                      "session_start_s", "session_end_s"}
_CONFIG_KEYS = _CONFIG_FLOAT_KEYS | {"asset_id"}


@dataclass(frozen=True)
class AssetConfig:
    """Per-asset metadata: price grid, session bounds and trim durations."""

    tick: float
    price_step: float
    asset_id: str | None = None
    trim_head_s: float = 3600.0
    trim_tail_s: float = 3600.0
    grid_dt_s: float = 10.0
    session_start_s: float | None = None
    session_end_s: float | None = None

    def __post_init__(self):
        if not self.tick > 0:
            raise ValueError(f"tick must be positive, got {self.tick!r}")
        if not self.price_step > 0:
            raise ValueError(f"price_step must be positive, got {self.price_step!r}")
        ratio = self.tick / self.price_step
        if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
            raise ValueError(
                f"price_step {self.price_step!r} must divide tick {self.tick!r}"
            )
        if self.trim_head_s < 0 or self.trim_tail_s < 0:
            raise ValueError("trim durations must be >= 0")
        if not self.grid_dt_s > 0:
            raise ValueError(f"grid_dt_s must be positive, got {self.grid_dt_s!r}")

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(dt_s=self.grid_dt_s, trim_head_s=self.trim_head_s,
                        trim_tail_s=self.trim_tail_s)


def load_asset_config(path: str | Path) -> AssetConfig:
    """Parse a key=value config file; unknown keys are rejected."""
    fields: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ParseError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _CONFIG_FLOAT_KEYS:
            try:
                fields[key] = float(value)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: {key} is not a number: {value!r}") from None
        else:
            fields[key] = value
    for required in ("tick", "price_step"):
        if required not in fields:
            raise ParseError(f"{path}: missing required key {required!r}")
    try:
        return AssetConfig(**fields)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_asset_config(config: AssetConfig, path: str | Path) -> None:
    lines = []
    if config.asset_id is not None:
        lines.append(f"asset_id={config.asset_id}")
    lines.append(f"tick={config.tick!r}")
    lines.append(f"price_step={config.price_step!r}")
    lines.append(f"trim_head_s={config.trim_head_s!r}")
    lines.append(f"trim_tail_s={config.trim_tail_s!r}")
    lines.append(f"grid_dt_s={config.grid_dt_s!r}")
    if config.session_start_s is not None:
        lines.append(f"session_start_s={config.session_start_s!r}")
    if config.session_end_s is not None:
        lines.append(f"session_end_s={config.session_end_s!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ----------------------------------------------------------------------
# Exact decimal price formatting
# ----------------------------------------------------------------------


def _step_decimal(price_step: float) -> tuple[int, int]:
    """Decompose the step's shortest decimal form as ``mantissa * 10**exponent``."""
    sign, digits, exponent = decimal.Decimal(repr(price_step)).as_tuple()
    mantissa = int("".join(map(str, digits)))
    return mantissa, int(exponent)


def _format_scaled(value: int, mantissa: int, exponent: int) -> str:
    """Exact decimal string of ``value * mantissa * 10**exponent``."""
    n = int(value) * mantissa
    sign = "-" if n < 0 else ""
    digits = str(abs(n))
    if exponent >= 0:
        return sign + digits + "0" * exponent
    if len(digits) <= -exponent:
        digits = "0" * (-exponent - len(digits) + 1) + digits
    return sign + digits[:exponent] + "." + digits[exponent:]


class _PriceFormatter:
    """Memoized steps-to-decimal formatter (price paths revisit few levels)."""

    def __init__(self, price_step: float):
        self._mantissa, self._exponent = _step_decimal(price_step)
        self._cache: dict[int, str] = {}

    def __call__(self, steps: int) -> str:
        out = self._cache.get(steps)
        if out is None:
            out = _format_scaled(steps, self._mantissa, self._exponent)
            self._cache[steps] = out
        return out


# ----------------------------------------------------------------------
# Session I/O
# ----------------------------------------------------------------------


def save_session(stream: EventStream, path: str | Path) -> None:
    """Write a stream in the session CSV schema with grid-exact price strings."""
    fmt = _PriceFormatter(stream.price_step)
    kind_chr = {int(EventKind.TRADE): "T", int(EventKind.BOOK_UPDATE): "B"}
    side_chr = {int(Side.ASK): "A", int(Side.BID): "B", 0: "-"}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCHEMA_COLUMNS)
        trade = stream.trade_mask
        for i in range(len(stream)):
            is_trade = trade[i]
            writer.writerow(
                (
                    int(stream.ts_ns[i]),
                    int(stream.seq[i]),
                    kind_chr[int(stream.kind[i])],
                    side_chr[int(stream.side[i])],
                    fmt(int(stream.price_steps[i])) if is_trade else "",
                    repr(float(stream.volume[i])) if is_trade else "",
                    fmt(int(stream.bid_steps[i])),
                    fmt(int(stream.ask_steps[i])),
                )
            )


def _int_column(values: np.ndarray, name: str) -> np.ndarray:
    try:
        return values.astype(np.int64)
    except (ValueError, OverflowError):
        for i, v in enumerate(values):
            try:
                int(v)
            except ValueError:
                raise ParseError(f"line {i + 2}: {name} is not an integer: {v!r}") from None
        raise


def _float_column(values: np.ndarray, name: str, *, allow_empty: bool) -> np.ndarray:
    empty = values == ""
    if empty.any() and not allow_empty:
        raise ParseError(f"line {int(np.flatnonzero(empty)[0]) + 2}: {name} is empty")
    out = np.full(len(values), np.nan)
    present = ~empty
    if present.any():
        try:
            out[present] = values[present].astype(np.float64)
        except ValueError:
            for i in np.flatnonzero(present):
                try:
                    float(values[i])
                except ValueError:
                    raise ParseError(f"line {i + 2}: {name} is not a number: {str(values[i])!r}") from None
            raise
    return out


def _snap_column(values: np.ndarray, price_step: float, name: str) -> np.ndarray:
    """Snap currency values to the step grid, NaN passing through as 0 steps."""
    present = ~np.isnan(values)
    scaled = np.where(present, values, 0.0) / price_step
    snapped = np.rint(scaled)
    off = present & ~(np.abs(scaled - snapped) <= 1e-3)
    if off.any():
        i = int(np.flatnonzero(off)[0])
        raise PriceOffGrid(
            f"line {i + 2}: {name} {float(values[i])!r} is not on the price_step grid ({price_step!r})"
        )
    return snapped.astype(np.int64)


def load_session(path: str | Path, config: AssetConfig) -> EventStream:
    """Load, validate and normalize one session file into an event stream.

    Enforces the schema (:class:`ParseError` with the offending line),
    strictly increasing ``(ts_ns, seq)`` (:class:`OrderingError`), uncrossed
    quotes (:class:`CrossedQuote`) and grid-exact prices
    (:class:`PriceOffGrid`). Records outside the configured session bounds
    are dropped. The stream's asset id falls back to the file stem.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path}: file has no header") from None
    if tuple(df.columns) != SCHEMA_COLUMNS:
        raise ParseError(
            f"{path}: header {tuple(df.columns)!r} does not match {SCHEMA_COLUMNS!r}"
        )

    ts = _int_column(df["ts_ns"].to_numpy(), "ts_ns")
    seq = _int_column(df["seq"].to_numpy(), "seq")

    kind_raw = df["kind"].to_numpy()
    kind = np.where(kind_raw == "T", int(EventKind.TRADE),
                    np.where(kind_raw == "B", int(EventKind.BOOK_UPDATE), -1)).astype(np.int8)
    if (kind == -1).any():
        i = int(np.flatnonzero(kind == -1)[0])
        raise ParseError(f"line {i + 2}: kind must be T or B, got {str(kind_raw[i])!r}")

    side_raw = df["side"].to_numpy()
    side = np.where(side_raw == "A", int(Side.ASK),
                    np.where(side_raw == "B", int(Side.BID),
                             np.where(side_raw == "-", 0, -9))).astype(np.int8)
    if (side == -9).any():
        i = int(np.flatnonzero(side == -9)[0])
        raise ParseError(f"line {i + 2}: side must be A, B or -, got {str(side_raw[i])!r}")

    is_trade = kind == int(EventKind.TRADE)
    bad = is_trade & (side == 0)
    if bad.any():
        raise ParseError(f"line {int(np.flatnonzero(bad)[0]) + 2}: trade row has side '-'")
    bad = ~is_trade & (side != 0)
    if bad.any():
        raise ParseError(f"line {int(np.flatnonzero(bad)[0]) + 2}: book row carries a side")

    price_c = _float_column(df["price"].to_numpy(), "price", allow_empty=True)
    volume = _float_column(df["volume"].to_numpy(), "volume", allow_empty=True)
    for name, values in (("price", price_c), ("volume", volume)):
        bad = is_trade & np.isnan(values)
        if bad.any():
            raise ParseError(f"line {int(np.flatnonzero(bad)[0]) + 2}: trade row missing {name}")
        bad = ~is_trade & ~np.isnan(values)
        if bad.any():
            raise ParseError(f"line {int(np.flatnonzero(bad)[0]) + 2}: book row carries a {name}")
    bad = is_trade & ~(volume > 0)
    if bad.any():
        raise ParseError(f"line {int(np.flatnonzero(bad)[0]) + 2}: volume must be positive")

    bid_c = _float_column(df["best_bid"].to_numpy(), "best_bid", allow_empty=False)
    ask_c = _float_column(df["best_ask"].to_numpy(), "best_ask", allow_empty=False)

    order_ok = np.ones(len(ts), dtype=bool)
    if len(ts) > 1:
        d_ts, d_seq = np.diff(ts), np.diff(seq)
        order_ok[1:] = (d_ts > 0) | ((d_ts == 0) & (d_seq > 0))
    if not order_ok.all():
        i = int(np.flatnonzero(~order_ok)[0])
        raise OrderingError(f"line {i + 2}: (ts_ns, seq) not strictly increasing")

    crossed = ask_c <= bid_c
    if crossed.any():
        i = int(np.flatnonzero(crossed)[0])
        raise CrossedQuote(
            f"line {i + 2}: best_ask {float(ask_c[i])!r} <= best_bid {float(bid_c[i])!r}"
        )

    keep = np.ones(len(ts), dtype=bool)
    if config.session_start_s is not None:
        keep &= ts >= int(round(config.session_start_s * 1e9))
    if config.session_end_s is not None:
        keep &= ts < int(round(config.session_end_s * 1e9))

    return EventStream(
        asset_id=config.asset_id if config.asset_id is not None else path.stem,
        tick=config.tick,
        price_step=config.price_step,
        ts_ns=ts[keep],
        seq=seq[keep],
        kind=kind[keep],
        side=side[keep],
        price_steps=_snap_column(price_c, config.price_step, "price")[keep],
        volume=volume[keep],
        bid_steps=_snap_column(bid_c, config.price_step, "best_bid")[keep],
        ask_steps=_snap_column(ask_c, config.price_step, "best_ask")[keep],
    )
