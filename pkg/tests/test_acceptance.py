"""Acceptance battery: full-scale exit criteria with pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. The simulated market is fair by construction, so every statistic
is tested against an absolute zero with 4-standard-error bands, plus the
scale bounds stated alongside each criterion.
"""
import shlex
import time

import numpy as np
import pytest

from fairmarket.book import NO_TRADE, Side, compute_next_trade_indices
from fairmarket.cli import main
from fairmarket.ingest import AssetConfig, load_session, save_asset_config, save_session
from fairmarket.mrr import MrrParams, next_trade_price_expectation, simulate
from fairmarket.stats import (
    STANDARD_EVENTS,
    GridSpec,
    build_grid,
    next_trade_gap,
    post_fill_gap,
    response_curve,
)

RHO, THETA = 0.5, 1.0
N_TRADES = 1_000_000
GRID = GridSpec(dt_s=10.0, trim_head_s=0.0, trim_tail_s=0.0)


def _report(line: str) -> None:
    print(f"\n[acceptance] {line}: PASS")


@pytest.fixture(scope="module")
def base_sim():
    """The shared quiet simulation, with its wall-clock cost."""
    t0 = time.perf_counter()
    path = simulate(MrrParams(rho=RHO, theta=THETA, seed=7), N_TRADES)
    return path, time.perf_counter() - t0


@pytest.fixture(scope="module")
def noisy_sim():
    return simulate(MrrParams(rho=RHO, theta=THETA, noise_std=0.5 * THETA, seed=11), N_TRADES)


class TestCriterion1EnumerationOracle:
    def test_oracle_certifies_zero_for_all_rhos(self):
        t0 = time.perf_counter()
        for rho in (0.1, 0.5, 0.9):
            params = MrrParams(rho=rho, theta=1.0)
            for side in (Side.ASK, Side.BID):
                for eps_prev in (1, -1):
                    res = next_trade_price_expectation(params, eps_prev, 200, side)
                    assert abs(res.value) <= res.tail_bound + 1e-9, (
                        f"rho={rho} side={side.name} eps={eps_prev}: "
                        f"|{res.value}| > {res.tail_bound} + 1e-9"
                    )
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"oracle sweep took {elapsed:.3f}s"
        for rho in (0.1, 0.5, 0.9):
            code = main(shlex.split(f"verify-mrr --rho {rho} --theta 1.0 --depth 200 --tol 1e-9"))
            assert code == 0, f"verify-mrr failed at rho={rho}"
        _report(f"criterion 1, enumeration oracle certifies zero at depth 200 in {elapsed:.3f}s")


class TestCriterion2FairPriceExistence:
    def test_gap_statistics_vanish_on_grid(self, base_sim):
        path, sim_seconds = base_sim
        t0 = time.perf_counter()
        grid = build_grid(path.stream, GRID)
        assert len(grid) == 100_000
        spread = 2 * THETA
        for cond in STANDARD_EVENTS:
            res = next_trade_gap(path.stream, GRID, cond)
            assert res.count > 0
            assert abs(res.estimate) <= 4 * res.stderr, (
                f"{cond.name}: |{res.estimate:.5f}| > 4 * {res.stderr:.5f}"
            )
            assert abs(res.estimate) <= 0.05 * spread
        elapsed = sim_seconds + (time.perf_counter() - t0)
        assert elapsed < 30.0, f"simulation plus gap battery took {elapsed:.1f}s"
        _report(
            "criterion 2, next-trade gap within 4 SE of zero on a 100000-point grid "
            f"({elapsed:.1f}s)"
        )


class TestCriterion3ZeroPostFillGap:
    def test_quiet_market(self, base_sim):
        path, _ = base_sim
        for side in (Side.ASK, Side.BID):
            for cond in STANDARD_EVENTS:
                res = post_fill_gap(path.stream, side, cond)
                assert abs(res.estimate) <= 4 * res.stderr, (
                    f"{side.name}/{cond.name}: |{res.estimate:.6f}| > 4 * {res.stderr:.6f}"
                )
        _report("criterion 3a, post-fill gaps within 4 SE of zero (no noise)")

    def test_noise_robustness(self, noisy_sim):
        for side in (Side.ASK, Side.BID):
            for cond in STANDARD_EVENTS:
                res = post_fill_gap(noisy_sim.stream, side, cond)
                assert abs(res.estimate) <= 4 * res.stderr, (
                    f"noisy {side.name}/{cond.name}: |{res.estimate:.6f}| > 4 * {res.stderr:.6f}"
                )
        _report("criterion 3b, post-fill gaps within 4 SE of zero (noise_std = 0.5 theta)")


class TestCriterion4FlatResponse:
    def test_response_variations_vanish(self, base_sim):
        path, _ = base_sim
        deltas = np.geomspace(0.01, 20.0, 30)
        spread = 2 * THETA
        for side in (Side.ASK, Side.BID):
            curve = response_curve(path.stream, side, deltas)
            assert (curve.counts > 0).all()
            for k in range(len(deltas)):
                value, se = curve.values[k], curve.stderrs[k]
                if se == 0.0:
                    assert value == 0.0
                else:
                    assert abs(value) <= 4 * se, (
                        f"{side.name} delta={deltas[k]:.3f}: |{value:.5f}| > 4 * {se:.5f}"
                    )
            assert np.nanmax(np.abs(curve.values)) <= 0.05 * spread
        _report("criterion 4, response variations flat over 30 log-spaced lags")


class TestCriterion5ModelAnalytics:
    def test_spread_exact(self, base_sim):
        path, _ = base_sim
        assert np.unique(path.ask_steps - path.bid_steps).tolist() == [path.spread_steps]
        assert path.spread_steps * path.price_step == 2 * THETA  # exact in floating point
        stream_spread = np.unique(path.stream.ask_steps - path.stream.bid_steps)
        assert stream_spread.tolist() == [path.spread_steps]
        _report("criterion 5a, spread identically 2 theta (bit-exact)")

    def test_sign_autocorrelation_decays_as_rho_power(self, base_sim):
        path, _ = base_sim
        eps = path.eps.astype(np.float64)
        for k in range(1, 6):
            prod = eps[k:] * eps[:-k]
            se = prod.std(ddof=1) / np.sqrt(prod.size)
            assert abs(prod.mean() - RHO**k) <= 4 * se, (
                f"lag {k}: |{prod.mean():.5f} - {RHO ** k:.5f}| > 4 * {se:.5f}"
            )
        _report("criterion 5b, sign autocorrelation matches rho^k for k <= 5")

    def test_increment_std(self, base_sim):
        path, _ = base_sim
        dp = np.diff(path.fair)
        expected = THETA * np.sqrt(1 - RHO**2)
        assert abs(dp.std() / expected - 1) < 0.01
        _report("criterion 5c, fair-price increment std within 1% of theta*sqrt(1-rho^2)")


class TestCriterion6IndexOracle:
    def test_thousand_random_streams(self):
        rng = np.random.default_rng(123)
        for _ in range(1000):
            n = int(rng.integers(0, 21))
            kind = rng.integers(0, 2, n).astype(np.int8)
            side = np.where(kind == 1, rng.choice([-1, 1], n), 0).astype(np.int8)
            got = compute_next_trade_indices(kind, side)
            want = _naive_scan(kind, side)
            for g, w in zip(got, want):
                assert np.array_equal(g, w)
        _report("criterion 6, next-trade indices equal the quadratic scan on 1000 streams")


def _naive_scan(kind, side):
    n = len(kind)
    res = []
    for target in (int(Side.ASK), int(Side.BID)):
        incl = [next((j for j in range(i, n) if kind[j] == 1 and side[j] == target), NO_TRADE)
                for i in range(n)]
        strict = [next((j for j in range(i + 1, n) if kind[j] == 1 and side[j] == target), NO_TRADE)
                  for i in range(n)]
        res.append((np.asarray(incl, dtype=np.int64), np.asarray(strict, dtype=np.int64)))
    return res[0][0], res[1][0], res[0][1], res[1][1]


class TestCriterion7CounterexampleSensitivity:
    def test_one_tick_shift_is_detected(self, tmp_path):
        path = simulate(MrrParams(rho=RHO, theta=THETA, seed=19), 200_000)
        tick = path.stream.tick
        shifted = path.stream.with_shifted_trades(Side.ASK, path.stream.tick_steps)

        res = next_trade_gap(shifted, GRID)
        assert abs(res.estimate - tick) <= 4 * res.stderr, (
            f"shifted gap {res.estimate:.4f} not within 4 SE of one tick {tick}"
        )

        config = AssetConfig(asset_id="shifted", tick=tick, price_step=path.price_step,
                             trim_head_s=0.0, trim_tail_s=0.0)
        save_asset_config(config, tmp_path / "case.config")
        for name, stream in (("fair", path.stream), ("shifted", shifted)):
            save_session(stream, tmp_path / f"{name}.csv")
            code = main(shlex.split(
                f"fairtest {tmp_path}/{name}.csv --config {tmp_path}/case.config "
                f"--out {tmp_path}/{name}"
            ))
            assert code == 0
        assert "verdict: PASS" in (tmp_path / "fair.txt").read_text()
        shifted_summary = (tmp_path / "shifted.txt").read_text()
        assert "verdict: FAIL" in shifted_summary
        assert "gap/all" in shifted_summary
        _report("criterion 7, one-tick ask shift yields a one-tick gap and a FAIL flag")


class TestCriterion8DeterminismAndRoundTrip:
    def test_identical_seeds_identical_files(self, tmp_path):
        for sub in ("one", "two"):
            (tmp_path / sub).mkdir()
            code = main(shlex.split(
                f"simulate --rho 0.5 --theta 1.0 --n 20000 --seed 99 -o {tmp_path}/{sub}/s.csv"
            ))
            assert code == 0
        for name in ("s.csv", "s.config"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
        # manifests record their own argv (paths differ); the checksums must not
        one = (tmp_path / "one" / "s.manifest").read_text().splitlines()
        two = (tmp_path / "two" / "s.manifest").read_text().splitlines()
        checks_one = [l for l in one if l.startswith("sha256.")]
        checks_two = [l for l in two if l.startswith("sha256.")]
        assert len(checks_one) == 2 and checks_one == checks_two

    def test_load_save_identity(self, tmp_path):
        path = simulate(MrrParams(rho=0.3, theta=0.7, noise_std=0.2, seed=42), 5000)
        save_session(path.stream, tmp_path / "x.csv")
        config = AssetConfig(asset_id=path.stream.asset_id, tick=path.tick,
                             price_step=path.price_step, trim_head_s=0.0, trim_tail_s=0.0)
        back = load_session(tmp_path / "x.csv", config)
        assert back.equals(path.stream)
        _report("criterion 8, seeded runs are bit-identical and load(save(x)) = x")
