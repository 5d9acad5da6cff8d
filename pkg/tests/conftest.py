"""Shared helpers: compact stream builders for hand-checked cases."""
from __future__ import annotations

import numpy as np

from fairmarket.book import EventKind, EventStream, Side

S = 1_000_000_000  # ns per second


def make_stream(rows, *, tick=0.01, price_step=0.0001, asset_id="test"):
    """Build a stream from compact row tuples.

    Rows are either ``("T", ts_s, "A"|"B", price, volume, bid, ask)`` for a
    trade or ``("B", ts_s, bid, ask)`` for a quote update. Timestamps are in
    seconds; ``seq`` is the row position.
    """
    ts, kind, side, price, volume, bid, ask = [], [], [], [], [], [], []
    for row in rows:
        if row[0] == "T":
            _, t, sd, p, v, b, a = row
            kind.append(int(EventKind.TRADE))
            side.append(int(Side.ASK) if sd == "A" else int(Side.BID))
            price.append(p)
            volume.append(v)
        else:
            _, t, b, a = row
            kind.append(int(EventKind.BOOK_UPDATE))
            side.append(0)
            price.append(0.0)
            volume.append(np.nan)
        ts.append(int(round(t * S)))
        bid.append(b)
        ask.append(a)
    from fairmarket.book import quantize_prices

    return EventStream(
        asset_id=asset_id,
        tick=tick,
        price_step=price_step,
        ts_ns=np.asarray(ts, dtype=np.int64),
        seq=np.arange(len(rows), dtype=np.int64),
        kind=np.asarray(kind, dtype=np.int8),
        side=np.asarray(side, dtype=np.int8),
        price_steps=quantize_prices(np.asarray(price), price_step),
        volume=np.asarray(volume, dtype=np.float64),
        bid_steps=quantize_prices(np.asarray(bid), price_step),
        ask_steps=quantize_prices(np.asarray(ask), price_step),
    )


def grid_s(*times_s):
    """Grid timestamps (ns) from seconds."""
    return np.asarray([int(round(t * S)) for t in times_s], dtype=np.int64)
