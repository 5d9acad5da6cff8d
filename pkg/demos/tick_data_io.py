"""Session files: exact round trips, validation, grids.

Sessions travel as CSV with a fixed eight-column schema; prices are decimal
strings exact on the asset's price-step grid, so saving and loading is
bit-exact. The loader reports the offending line for malformed input.

Run:  python3 demos/tick_data_io.py
"""
import tempfile
from pathlib import Path

from fairmarket import (
    AssetConfig,
    CrossedQuote,
    GridSpec,
    MrrParams,
    OrderingError,
    build_grid,
    load_asset_config,
    load_session,
    save_asset_config,
    save_session,
    simulate,
)

workdir = Path(tempfile.mkdtemp(prefix="fairmarket_demo_"))
print(f"working in {workdir}\n")

# 1. simulate, persist, reload: identity down to the last bit
path = simulate(MrrParams(rho=0.4, theta=0.8, seed=1), 5_000)
csv_path = workdir / "session.csv"
save_session(path.stream, csv_path)
config = AssetConfig(
    asset_id="demo",
    tick=path.tick,
    price_step=path.price_step,
    trim_head_s=0.0,
    trim_tail_s=0.0,
)
save_asset_config(config, workdir / "session.config")
reloaded = load_session(csv_path, load_asset_config(workdir / "session.config"))
print(f"saved {len(path.stream)} events; reloaded equals original: "
      f"{reloaded.equals(path.stream)}")
print("first lines of the file:")
for line in csv_path.read_text().splitlines()[:4]:
    print(f"  {line}")

# 2. validation failures carry the line number
print("\nmalformed input is rejected with its location:")
header = "ts_ns,seq,kind,side,price,volume,best_bid,best_ask\n"
for label, body, expected in (
    ("crossed quotes", "0,0,B,-,,,10.2,10.1\n", CrossedQuote),
    ("shuffled rows", "5,0,B,-,,,10.0,10.1\n1,1,B,-,,,10.0,10.1\n", OrderingError),
):
    bad = workdir / "bad.csv"
    bad.write_text(header + body)
    try:
        load_session(bad, config)
    except expected as exc:
        print(f"  {label}: {type(exc).__name__}: {exc}")

# 3. grids: regular sampling inside a trimmed session window
stream = reloaded
spec = GridSpec(dt_s=10.0, trim_head_s=600.0, trim_tail_s=600.0)
grid = build_grid(stream, spec)
print(f"\nsession spans {stream.session_end_ns / 1e9:.0f}s; with 600s trims and a "
      f"10s grid: {len(grid)} sample points")
print(f"first point {grid[0] / 1e9:.0f}s, last point {grid[-1] / 1e9:.0f}s")
