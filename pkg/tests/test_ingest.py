"""Session CSV and config parsing, grids, round trips."""
import numpy as np
import pytest

from conftest import S, make_stream
from fairmarket.errors import CrossedQuote, EmptyConditioning, OrderingError, ParseError, PriceOffGrid
from fairmarket.ingest import (
    AssetConfig,
    build_grid,
    load_asset_config,
    load_session,
    save_asset_config,
    save_session,
)
from fairmarket.mrr import MrrParams, simulate
from fairmarket.stats import ALL, GridSpec, next_trade_gap


HEADER = "ts_ns,seq,kind,side,price,volume,best_bid,best_ask\n"


def _write(tmp_path, body, name="session.csv"):
    p = tmp_path / name
    p.write_text(HEADER + body, encoding="utf-8")
    return p


BASIC = (
    "0,0,B,-,,,10.0,10.1\n"
    "1000000000,1,T,A,10.1,2.0,10.0,10.1\n"
    "2000000000,2,T,B,10.0,1.5,10.0,10.1\n"
)


class TestBuildGrid:
    def test_seven_hour_session_hour_trims(self):
        rows = [("B", 0, 10.0, 10.1), ("B", 7 * 3600, 10.0, 10.1)]
        s = make_stream(rows)
        grid = build_grid(s, GridSpec(dt_s=10.0, trim_head_s=3600.0, trim_tail_s=3600.0))
        assert len(grid) == 1800
        assert grid[0] == 3600 * S
        assert grid[-1] == (7 * 3600 - 3600 - 10) * S

    def test_session_shorter_than_trims(self):
        s = make_stream([("B", 0, 10.0, 10.1), ("B", 100, 10.0, 10.1)])
        assert build_grid(s, GridSpec(dt_s=10.0)).size == 0

    def test_end_exclusive(self):
        s = make_stream([("B", 0, 10.0, 10.1), ("B", 25, 10.0, 10.1)])
        grid = build_grid(s, GridSpec(dt_s=10.0, trim_head_s=0.0, trim_tail_s=0.0))
        assert grid.tolist() == [0, 10 * S, 20 * S]


class TestAssetConfig:
    def test_round_trip(self, tmp_path):
        cfg = AssetConfig(asset_id="x", tick=0.01, price_step=0.0001,
                          trim_head_s=0.0, trim_tail_s=0.0, grid_dt_s=5.0)
        save_asset_config(cfg, tmp_path / "a.config")
        assert load_asset_config(tmp_path / "a.config") == cfg

    def test_defaults(self, tmp_path):
        p = tmp_path / "a.config"
        p.write_text("tick=0.01\nprice_step=0.0001\n")
        cfg = load_asset_config(p)
        assert cfg.trim_head_s == 3600.0 and cfg.grid_dt_s == 10.0

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "a.config"
        p.write_text("tick=0.01\nprice_step=0.0001\ncolor=red\n")
        with pytest.raises(ParseError, match="unknown key"):
            load_asset_config(p)

    def test_missing_required(self, tmp_path):
        p = tmp_path / "a.config"
        p.write_text("tick=0.01\n")
        with pytest.raises(ParseError, match="price_step"):
            load_asset_config(p)

    def test_step_must_divide_tick(self):
        with pytest.raises(ValueError, match="divide"):
            AssetConfig(tick=0.01, price_step=0.0003)

    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "a.config"
        p.write_text("# session metadata\n\ntick=0.01\nprice_step=0.0001\n")
        assert load_asset_config(p).tick == 0.01


CFG = AssetConfig(tick=0.01, price_step=0.0001, trim_head_s=0.0, trim_tail_s=0.0)


class TestLoadSession:
    def test_basic_rows(self, tmp_path):
        s = load_session(_write(tmp_path, BASIC), CFG)
        assert len(s) == 3
        assert s.asset_id == "session"
        assert s.trade_mask.tolist() == [False, True, True]
        assert s.volume[1] == 2.0
        assert s.price_steps[1] == 101000

    def test_empty_file_after_header(self, tmp_path):
        s = load_session(_write(tmp_path, ""), CFG)
        assert len(s) == 0
        with pytest.raises(EmptyConditioning):
            next_trade_gap(s, np.asarray([0], dtype=np.int64), ALL)

    def test_missing_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2,3\n")
        with pytest.raises(ParseError, match="header"):
            load_session(p, CFG)

    def test_crossed_quote_row_reported(self, tmp_path):
        body = BASIC + "3000000000,3,B,-,,,10.2,10.1\n"
        with pytest.raises(CrossedQuote, match="line 5"):
            load_session(_write(tmp_path, body), CFG)

    def test_off_grid_price_reported(self, tmp_path):
        body = "0,0,T,A,10.00003,1.0,10.0,10.1\n"
        with pytest.raises(PriceOffGrid, match="line 2"):
            load_session(_write(tmp_path, body), CFG)

    def test_non_monotone_reported(self, tmp_path):
        body = "1000000000,0,B,-,,,10.0,10.1\n0,1,B,-,,,10.0,10.1\n"
        with pytest.raises(OrderingError, match="line 3"):
            load_session(_write(tmp_path, body), CFG)

    def test_bad_kind_and_side(self, tmp_path):
        with pytest.raises(ParseError, match="kind"):
            load_session(_write(tmp_path, "0,0,X,-,,,10.0,10.1\n"), CFG)
        with pytest.raises(ParseError, match="side"):
            load_session(_write(tmp_path, "0,0,T,Z,10.0,1.0,10.0,10.1\n"), CFG)
        with pytest.raises(ParseError, match="side"):
            load_session(_write(tmp_path, "0,0,T,-,10.0,1.0,10.0,10.1\n"), CFG)

    def test_trade_missing_fields(self, tmp_path):
        with pytest.raises(ParseError, match="price"):
            load_session(_write(tmp_path, "0,0,T,A,,1.0,10.0,10.1\n"), CFG)
        with pytest.raises(ParseError, match="volume"):
            load_session(_write(tmp_path, "0,0,T,A,10.0,,10.0,10.1\n"), CFG)
        with pytest.raises(ParseError, match="positive"):
            load_session(_write(tmp_path, "0,0,T,A,10.0,0.0,10.0,10.1\n"), CFG)

    def test_book_row_with_payload(self, tmp_path):
        with pytest.raises(ParseError, match="book row"):
            load_session(_write(tmp_path, "0,0,B,-,10.0,,10.0,10.1\n"), CFG)

    def test_bad_int_field(self, tmp_path):
        with pytest.raises(ParseError, match="ts_ns"):
            load_session(_write(tmp_path, "abc,0,B,-,,,10.0,10.1\n"), CFG)

    def test_session_bounds_drop_records(self, tmp_path):
        cfg = AssetConfig(tick=0.01, price_step=0.0001, trim_head_s=0.0,
                          trim_tail_s=0.0, session_start_s=0.5, session_end_s=1.5)
        s = load_session(_write(tmp_path, BASIC), cfg)
        assert len(s) == 1
        assert s.ts_ns[0] == S

    def test_asset_id_from_config(self, tmp_path):
        cfg = AssetConfig(asset_id="custom", tick=0.01, price_step=0.0001)
        s = load_session(_write(tmp_path, BASIC), cfg)
        assert s.asset_id == "custom"


class TestRoundTrip:
    def test_hand_stream(self, tmp_path):
        s = make_stream([
            ("B", 0, 10.0, 10.1),
            ("T", 1, "A", 10.1, 0.3333333333333333, 10.0, 10.1),
            ("T", 2.5, "B", 10.0, 7.0, 10.0, 10.1),
        ])
        save_session(s, tmp_path / "x.csv")
        cfg = AssetConfig(asset_id="test", tick=s.tick, price_step=s.price_step,
                          trim_head_s=0.0, trim_tail_s=0.0)
        back = load_session(tmp_path / "x.csv", cfg)
        assert back.equals(s)

    def test_simulated_stream_binary_lattice(self, tmp_path):
        # price_step = theta / 2**20 exercises long decimal expansions
        path = simulate(MrrParams(rho=0.37, theta=0.9, seed=21), 3000)
        save_session(path.stream, tmp_path / "sim.csv")
        cfg = AssetConfig(asset_id=path.stream.asset_id, tick=path.tick,
                          price_step=path.price_step, trim_head_s=0.0, trim_tail_s=0.0)
        back = load_session(tmp_path / "sim.csv", cfg)
        assert back.equals(path.stream)

    def test_save_is_deterministic(self, tmp_path):
        path = simulate(MrrParams(rho=0.5, theta=1.0, seed=22), 500)
        save_session(path.stream, tmp_path / "a.csv")
        save_session(path.stream, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
