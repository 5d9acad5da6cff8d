"""Batch command line front end.

Subcommands:

* ``simulate``: write an MRR path as a session CSV plus its config file.
* ``fairtest``: run the gap / post-fill-gap battery over session files and
  emit a machine table, a human summary and a manifest.
* ``response``: emit per-side response-curve points as plot-ready CSV.
* ``verify-mrr``: check the zero-expectation prediction for the next trade
  price against the enumeration oracle.

Every command writes a plain-text manifest recording the exact argument
vector, tool version and output checksums; re-running the recorded argv
reproduces the outputs bit-exactly. Exit codes: 0 success, 1 runtime or data
error, 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .book import Side
from .errors import DepthTooSmall, EmptyConditioning, FairMarketError
from .ingest import AssetConfig, load_asset_config, load_session, save_asset_config, save_session
from .mrr import MrrParams, next_trade_price_expectation, simulate
from .stats import (
    DEFAULT_RESPONSE_DELTAS,
    STANDARD_EVENTS,
    GridSpec,
    StatResult,
    next_trade_gap,
    pool_stats,
    post_fill_gap,
    response_curve,
    trim_window,
)

FAMILIES = ("gap", "ask_fill_gap", "bid_fill_gap")

VERIFY_TAIL_FRACTION = 0.01
"""verify-mrr refuses to certify when the tail bound exceeds this fraction of theta."""


class _UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# Manifest helpers
# ----------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path: Path, command: str, argv: list[str],
                    fields: dict[str, object], outputs: list[Path]) -> None:
    lines = [f"command={command}", f"version={__version__}", f"argv={shlex.join(argv)}"]
    lines += [f"{k}={v}" for k, v in fields.items()]
    for out in outputs:
        lines.append(f"output={out}")
    for out in outputs:
        lines.append(f"sha256.{out.name}={_sha256(out)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(x: float) -> str:
    return "NA" if not math.isfinite(x) else f"{x:+.3e}"


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        params = MrrParams(rho=args.rho, theta=args.theta, p0=args.p0,
                           noise_std=args.noise_std, seed=args.seed)
        if args.n < 1:
            raise ValueError(f"--n must be >= 1, got {args.n}")
        interval_ns = int(round(args.trade_interval_s * 1e9))
        if interval_ns < 1:
            raise ValueError("--trade-interval-s is too small")
    except ValueError as exc:
        raise _UsageError(str(exc)) from None

    path = simulate(params, args.n, trade_interval_ns=interval_ns)
    out = Path(args.out)
    save_session(path.stream, out)
    config = AssetConfig(
        asset_id=out.stem,
        tick=path.tick,
        price_step=path.price_step,
        trim_head_s=0.0,
        trim_tail_s=0.0,
        grid_dt_s=10.0,
    )
    config_path = out.with_suffix(".config")
    save_asset_config(config, config_path)
    _write_manifest(
        out.with_suffix(".manifest"),
        "simulate",
        list(args.raw_argv),
        {
            "param.rho": params.rho,
            "param.theta": params.theta,
            "param.p0": params.p0,
            "param.noise_std": params.noise_std,
            "param.seed": params.seed,
            "param.n": args.n,
            "param.trade_interval_ns": interval_ns,
        },
        [out, config_path],
    )
    print(f"wrote {args.n} trades to {out} (config: {config_path})")
    return 0


# ----------------------------------------------------------------------
# fairtest
# ----------------------------------------------------------------------


def _battery(stream, grid_spec: GridSpec) -> dict[tuple[str, str], StatResult]:
    window = trim_window(stream, grid_spec)
    empty = StatResult(math.nan, 0, math.nan, math.nan)
    out: dict[tuple[str, str], StatResult] = {}
    for cond in STANDARD_EVENTS:
        for family, compute in (
            ("gap", lambda: next_trade_gap(stream, grid_spec, cond)),
            ("ask_fill_gap", lambda: post_fill_gap(stream, Side.ASK, cond, window=window)),
            ("bid_fill_gap", lambda: post_fill_gap(stream, Side.BID, cond, window=window)),
        ):
            try:
                out[(family, cond.name)] = compute()
            except EmptyConditioning:
                out[(family, cond.name)] = empty
    return out


def _flag(res: StatResult, tick: float) -> str:
    """PASS/FAIL per cell: fail unless the estimate is certifiably below one tick.

    The certificate requires |estimate| + 4 standard errors <= tick, so a
    one-tick distortion trips the flag even in the presence of sampling
    noise.
    """
    if res.count == 0:
        return "NA"
    if not math.isfinite(res.stderr):
        return "FAIL"
    return "FAIL" if abs(res.estimate) + 4.0 * res.stderr > tick else "ok"


def _summary_text(asset: str, tick: float, pooled: dict[tuple[str, str], StatResult]) -> str:
    names = [c.name for c in STANDARD_EVENTS]
    width = max(len(n) for n in names) + 2
    head = "conditioning".ljust(16) + "".join(n.rjust(width) for n in names)
    lines = [f"fairtest summary: asset={asset} tick={tick!r}", head]
    failing = []
    for family in FAMILIES:
        cells = []
        for name in names:
            res = pooled[(family, name)]
            cells.append(_fmt(res.estimate).rjust(width))
            if _flag(res, tick) == "FAIL":
                failing.append(f"{family}/{name}")
        lines.append(family.ljust(16) + "".join(cells))
    verdict = "FAIL" if failing else "PASS"
    if failing:
        lines.append("failing cells: " + ", ".join(failing))
    lines.append(f"verdict: {verdict}")
    return "\n".join(lines)


def _cmd_fairtest(args: argparse.Namespace) -> int:
    config = load_asset_config(args.config)
    grid_spec = config.grid_spec
    if args.grid_dt is not None:
        if args.grid_dt <= 0:
            raise _UsageError("--grid-dt must be positive")
        grid_spec = GridSpec(dt_s=args.grid_dt, trim_head_s=grid_spec.trim_head_s,
                             trim_tail_s=grid_spec.trim_tail_s)

    per_file = []
    asset = config.asset_id or Path(args.inputs[0]).stem
    for name in args.inputs:
        stream = load_session(name, config)
        per_file.append((Path(name).stem, _battery(stream, grid_spec)))

    pooled = {
        key: pool_stats([b[key] for _, b in per_file], config.tick)
        for key in per_file[0][1]
    }

    out = Path(args.out)
    table_path = out.with_suffix(".csv")
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write("asset,session,statistic,conditioning,estimate,stderr,count,estimate_ticks,flag\n")

        def row(session: str, family: str, cond_name: str, res: StatResult) -> str:
            return (
                f"{asset},{session},{family},{cond_name},{_csv_num(res.estimate)},"
                f"{_csv_num(res.stderr)},{res.count},{_csv_num(res.estimate_in_ticks)},"
                f"{_flag(res, config.tick)}\n"
            )

        for (family, cond_name), res in pooled.items():
            fh.write(row("pooled", family, cond_name, res))
        if len(per_file) > 1:  # per-session diagnostics
            for session, battery in per_file:
                for (family, cond_name), res in battery.items():
                    fh.write(row(session, family, cond_name, res))
    summary = _summary_text(asset, config.tick, pooled)
    summary_path = out.with_suffix(".txt")
    summary_path.write_text(summary + "\n", encoding="utf-8")
    print(summary)

    fields: dict[str, object] = {
        "config": args.config,
        "grid_dt_s": grid_spec.dt_s,
        "tick": config.tick,
    }
    for i, name in enumerate(args.inputs):
        fields[f"input.{i}"] = name
    for (family, cond_name), res in pooled.items():
        fields[f"stat.{family}.{cond_name}"] = f"{res.estimate!r},{res.stderr!r},{res.count}"
    _write_manifest(out.with_suffix(".manifest"), "fairtest", list(args.raw_argv),
                    fields, [table_path, summary_path])
    return 0


def _csv_num(x: float) -> str:
    return "NA" if not math.isfinite(x) else repr(x)


# ----------------------------------------------------------------------
# response
# ----------------------------------------------------------------------


def _cmd_response(args: argparse.Namespace) -> int:
    config = load_asset_config(args.config)
    if args.deltas is not None:
        try:
            deltas = np.asarray([float(x) for x in args.deltas.split(",")], dtype=np.float64)
        except ValueError:
            raise _UsageError(f"--deltas must be comma-separated numbers, got {args.deltas!r}") from None
        if deltas.size == 0 or np.any(deltas <= 0) or np.any(np.diff(deltas) <= 0):
            raise _UsageError("--deltas must be positive and strictly ascending")
    else:
        deltas = DEFAULT_RESPONSE_DELTAS

    streams = [load_session(name, config) for name in args.inputs]
    out = Path(args.out)
    outputs = []
    for side, label in ((Side.ASK, "ask"), (Side.BID, "bid")):
        per_lag: list[list[StatResult]] = [[] for _ in deltas]
        any_fills = False
        for stream in streams:
            window = trim_window(stream, config.grid_spec)
            try:
                curve = response_curve(stream, side, deltas, window=window)
            except EmptyConditioning:
                continue
            any_fills = True
            for k in range(len(deltas)):
                per_lag[k].append(
                    StatResult(curve.values[k], int(curve.counts[k]), curve.stderrs[k], math.nan)
                )
        side_path = out.parent / f"{out.stem}_{label}.csv"
        with open(side_path, "w", encoding="utf-8") as fh:
            fh.write("delta_s,value,count\n")
            if any_fills:
                for k, d in enumerate(deltas):
                    pooled = pool_stats(per_lag[k], config.tick)
                    value = "" if pooled.count == 0 else repr(float(pooled.estimate))
                    fh.write(f"{float(d)!r},{value},{pooled.count}\n")
        if not any_fills:
            print(f"warning: no {label}-side fills; {side_path} is empty", file=sys.stderr)
        outputs.append(side_path)

    _write_manifest(
        out.with_suffix(".manifest"), "response", list(args.raw_argv),
        {
            "config": args.config,
            "tick": config.tick,
            "deltas_s": ",".join(repr(float(d)) for d in deltas),
            **{f"input.{i}": name for i, name in enumerate(args.inputs)},
        },
        outputs,
    )
    return 0


# ----------------------------------------------------------------------
# verify-mrr
# ----------------------------------------------------------------------


def _cmd_verify_mrr(args: argparse.Namespace) -> int:
    try:
        params = MrrParams(rho=args.rho, theta=args.theta)
        if args.depth < 1:
            raise ValueError(f"--depth must be >= 1, got {args.depth}")
        if args.tol < 0:
            raise ValueError(f"--tol must be >= 0, got {args.tol}")
    except ValueError as exc:
        raise _UsageError(str(exc)) from None

    max_tail = VERIFY_TAIL_FRACTION * params.theta
    lines = [f"verify-mrr: rho={params.rho!r} theta={params.theta!r} depth={args.depth} tol={args.tol!r}"]
    ok = True
    results = {}
    try:
        for side, label in ((Side.ASK, "next-ask"), (Side.BID, "next-bid")):
            for eps_prev in (1, -1):
                res = next_trade_price_expectation(
                    params, eps_prev, args.depth, side, max_tail=max_tail
                )
                passed = abs(res.value) <= res.tail_bound + args.tol
                ok &= passed
                results[f"{label}.eps{eps_prev:+d}"] = res
                lines.append(
                    f"  {label:9s} eps_prev={eps_prev:+d}  value={res.value:+.6e}  "
                    f"tail_bound={res.tail_bound:.6e}  {'ok' if passed else 'VIOLATED'}"
                )
    except DepthTooSmall as exc:
        need = "unknown" if exc.required_depth is None else str(exc.required_depth)
        print(f"error: {exc} (depth required: about {need})", file=sys.stderr)
        return 1

    lines.append("PASS" if ok else "FAIL")
    report = "\n".join(lines)
    print(report)
    if args.out is not None:
        out = Path(args.out)
        report_path = out.with_suffix(".txt")
        report_path.write_text(report + "\n", encoding="utf-8")
        fields: dict[str, object] = {"param.rho": params.rho, "param.theta": params.theta,
                                     "param.depth": args.depth, "param.tol": args.tol}
        for key, res in results.items():
            fields[f"oracle.{key}"] = f"{res.value!r},{res.tail_bound!r}"
        _write_manifest(out.with_suffix(".manifest"), "verify-mrr", list(args.raw_argv),
                        fields, [report_path])
    return 0 if ok else 1


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairmarket",
        description="Fair-market order-flow simulation and fair-price statistics.",
    )
    parser.add_argument("--version", action="version", version=f"fairmarket {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an MRR path to a session CSV")
    p.add_argument("--rho", type=float, required=True, help="sign autocorrelation, in (0, 1)")
    p.add_argument("--theta", type=float, required=True, help="impact scale (half spread)")
    p.add_argument("--noise-std", type=float, default=0.0, help="exogenous price noise std")
    p.add_argument("--n", type=int, required=True, help="number of trades")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p0", type=float, default=100.0, help="initial fair price")
    p.add_argument("--trade-interval-s", type=float, default=1.0, help="seconds between trades")
    p.add_argument("-o", "--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fairtest", help="run the fair-price statistics battery")
    p.add_argument("inputs", nargs="+", help="session CSV files (pooled as one asset)")
    p.add_argument("--config", required=True, help="asset config file")
    p.add_argument("--grid-dt", type=float, default=None, help="override grid spacing (s)")
    p.add_argument("--out", required=True, help="output prefix (.csv/.txt/.manifest)")
    p.set_defaults(func=_cmd_fairtest)

    p = sub.add_parser("response", help="emit response-curve plot data per side")
    p.add_argument("inputs", nargs="+", help="session CSV files (pooled as one asset)")
    p.add_argument("--config", required=True, help="asset config file")
    p.add_argument("--deltas", default=None, help="comma-separated lags in seconds")
    p.add_argument("--out", required=True, help="output prefix (_ask.csv/_bid.csv/.manifest)")
    p.set_defaults(func=_cmd_response)

    p = sub.add_parser("verify-mrr", help="check the next-trade-price expectation by enumeration")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--depth", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("-o", "--out", default=None, help="optional report prefix")
    p.set_defaults(func=_cmd_verify_mrr)

    return parser


def main(argv: list[str] | None = None) -> int:
    raw_argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(raw_argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if isinstance(code, int) else 0 if code is None else 2
    args.raw_argv = raw_argv
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (FairMarketError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
