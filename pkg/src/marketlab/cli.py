"""Command-line driver.

Subcommands: simulate | analyze | predict | bootstrap | serve | replay.
Every command honors ``--seed`` and ``--out-dir``, writes its delimited
outputs plus figures (unless ``--no-figures``), and records a manifest
with content checksums so reruns can be verified byte for byte.

Exit codes: 0 success, 2 usage error, 3 input error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from . import report
from .errors import (
    InvalidInputError,
    MarketLabError,
    NewsLoadError,
    ReplayError,
    SeriesParseError,
)
from .io import (
    load_series,
    write_bands_csv,
    write_manifest,
    write_predictions_csv,
    write_series_csv,
    write_success_csv,
    write_trajectory_csv,
)
from .market import MarketParams
from .selfplay import run_selfplay
from .session.config import SessionConfig
from .session.log import SessionLog, replay as replay_log
from .slaved import (
    EnsembleConfig,
    bootstrap_bands,
    ensemble_mean,
    predict,
    success_table,
    threshold_grid,
)

USAGE_ERROR = 2
INPUT_ERROR = 3
RUNTIME_ERROR = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    parser.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument(
        "--no-figures", dest="figures", action="store_false", help="skip PNG figures"
    )


def _add_ensemble_options(parser: argparse.ArgumentParser, default_runs: int) -> None:
    parser.add_argument("--agents", type=int, default=None, help="agents per run (default 10)")
    parser.add_argument("--s-max", type=int, default=None, help="max strategies per agent (default 10)")
    parser.add_argument("--m-max", type=int, default=None, help="max memory bits (default 6)")
    parser.add_argument("--runs", type=int, default=None, help=f"Monte Carlo runs (default {default_runs})")
    parser.add_argument("--mode", choices=["dollar", "minority"], default=None)
    parser.add_argument("--q", type=int, default=None, help="decoupling horizon in unrealized bits (default 1)")
    parser.add_argument("--sign-returns", action="store_true", help="score with return signs only")
    parser.add_argument("--census", action="store_true", help="count held strategies instead of agents")


def _ensemble_config(args, default_runs: int) -> EnsembleConfig:
    base: dict = {}
    if args.config is not None:
        base = json.loads(Path(args.config).read_text())

    def pick(flag, key, fallback):
        if flag is not None:
            return flag
        return base.get(key, fallback)

    return EnsembleConfig(
        n_agents=int(pick(args.agents, "n_agents", 10)),
        s_max=int(pick(args.s_max, "s_max", 10)),
        m_max=int(pick(args.m_max, "m_max", 6)),
        runs=int(pick(args.runs, "runs", default_runs)),
        mode=pick(args.mode, "mode", "dollar"),
        q=int(pick(args.q, "q", 1)),
        seed=int(pick(args.seed, "seed", 0)),
        sign_returns=bool(args.sign_returns or base.get("sign_returns", False)),
        census=bool(args.census or base.get("census", False)),
    )


def _parse_thresholds(spec: str | None) -> list[float]:
    if spec is None:
        return threshold_grid()
    parts = spec.split(":")
    if len(parts) != 3:
        raise InvalidInputError("--thresholds must be start:step:stop")
    start, step, stop = (float(p) for p in parts)
    return threshold_grid(start, stop, step)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, out: Path, cfg_dict: dict, seed: int, inputs: dict, outputs: dict) -> int:
    rel_outputs = {name: out / fname for name, fname in outputs.items()}
    write_manifest(
        out / "manifest.json",
        command=sys.argv[1:] if args.argv is None else args.argv,
        config=cfg_dict,
        seed=seed,
        inputs=inputs,
        outputs=rel_outputs,
    )
    for name, path in rel_outputs.items():
        print(f"wrote {name}: {path}")
    print(f"wrote manifest: {out / 'manifest.json'}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _ensemble_config(args, default_runs=1)
    periods = args.periods
    market = MarketParams(
        initial_price=args.initial_price,
        liquidity=args.liquidity if args.liquidity else 10.0 * cfg.n_agents,
        periods=periods,
    )
    force = None
    if args.force_constant is not None:
        force = 1 if args.force_constant in ("+1", "1", "buy") else -1
    series, traj, _pop = run_selfplay(cfg, periods, market, force_constant=force)
    out = _out_dir(args)
    write_series_csv(series, out / "series.csv")
    write_trajectory_csv(traj, out / "trajectory.csv")
    outputs = {"series": "series.csv", "trajectory": "trajectory.csv"}
    if args.figures:
        report.trajectory_figure(series, traj, out / "trajectory.png")
        outputs["trajectory_figure"] = "trajectory.png"
    cfg_dict = {
        "ensemble": cfg.__dict__,
        "periods": periods,
        "market": {"initial_price": market.initial_price, "liquidity": market.liquidity},
        "force_constant": force,
    }
    return _finish(args, out, cfg_dict, cfg.seed, {}, outputs)


def cmd_analyze(args) -> int:
    series = load_series(args.series)
    cfg = _ensemble_config(args, default_runs=1000)
    thresholds = _parse_thresholds(args.thresholds)
    traj = ensemble_mean(cfg, series)
    table = success_table(traj, series, thresholds, target_offset=args.target_offset)
    predictions = predict(traj, args.threshold, target_offset=args.target_offset)
    out = _out_dir(args)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_success_csv(table, out / "success_table.csv")
    write_predictions_csv(predictions, series, out / "predictions.csv")
    outputs = {
        "trajectory": "trajectory.csv",
        "success_table": "success_table.csv",
        "predictions": "predictions.csv",
    }
    if args.figures:
        report.trajectory_figure(series, traj, out / "trajectory.png")
        report.success_figure(table, out / "success_table.png")
        outputs["trajectory_figure"] = "trajectory.png"
        outputs["success_figure"] = "success_table.png"
    cfg_dict = {
        "ensemble": cfg.__dict__,
        "thresholds": thresholds,
        "prediction_threshold": args.threshold,
        "target_offset": args.target_offset,
    }
    return _finish(args, out, cfg_dict, cfg.seed, {"series": args.series}, outputs)


def cmd_predict(args) -> int:
    series = load_series(args.series)
    cfg = _ensemble_config(args, default_runs=1000)
    traj = ensemble_mean(cfg, series)
    predictions = predict(traj, args.threshold, target_offset=args.target_offset)
    out = _out_dir(args)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_predictions_csv(predictions, series, out / "predictions.csv")
    outputs = {"trajectory": "trajectory.csv", "predictions": "predictions.csv"}
    if args.figures:
        report.trajectory_figure(series, traj, out / "trajectory.png")
        outputs["trajectory_figure"] = "trajectory.png"
    cfg_dict = {
        "ensemble": cfg.__dict__,
        "prediction_threshold": args.threshold,
        "target_offset": args.target_offset,
    }
    return _finish(args, out, cfg_dict, cfg.seed, {"series": args.series}, outputs)


def cmd_bootstrap(args) -> int:
    series = load_series(args.series)
    cfg = _ensemble_config(args, default_runs=100)
    bands = bootstrap_bands(cfg, series, outer=args.outer, inner=args.inner)
    out = _out_dir(args)
    write_bands_csv(bands, out / "bands.csv")
    outputs = {"bands": "bands.csv"}
    if args.figures:
        report.bands_figure(bands, out / "bands.png")
        outputs["bands_figure"] = "bands.png"
    cfg_dict = {"ensemble": cfg.__dict__, "outer": args.outer, "inner": args.inner}
    return _finish(args, out, cfg_dict, cfg.seed, {"series": args.series}, outputs)


def cmd_serve(args) -> int:
    if args.config is None:
        raise InvalidInputError("serve needs --config pointing at a session JSON file")
    cfg = SessionConfig.from_json(args.config)
    out = _out_dir(args)
    log_path = out / "session.ndjson"

    def announce(port: int) -> None:
        print(f"session server listening on {args.host}:{port}", flush=True)
        if args.port_file:
            Path(args.port_file).write_text(str(port))

    from .session.server import serve_session

    with open(log_path, "w") as sink:
        asyncio.run(
            serve_session(
                cfg,
                host=args.host,
                port=args.port,
                static_dir=args.static,
                log_sink=sink,
                on_port=announce,
            )
        )
    write_manifest(
        out / "manifest.json",
        command=sys.argv[1:] if args.argv is None else args.argv,
        config=cfg.public_dict(),
        seed=cfg.seed,
        inputs={"session_config": args.config},
        outputs={"log": log_path},
    )
    print(f"wrote log: {log_path}")
    return 0


def cmd_replay(args) -> int:
    log = SessionLog.read(args.log)
    series = replay_log(log)
    out = _out_dir(args)
    write_series_csv(series, out / "series.csv")
    outputs = {"series": "series.csv"}
    return _finish(args, out, {"log": str(args.log)}, 0, {"log": args.log}, outputs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marketlab",
        description="Market game laboratory: simulate, analyze, predict, bootstrap, serve, replay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="self-coupled game producing a synthetic series")
    _add_common(p)
    _add_ensemble_options(p, default_runs=1)
    p.add_argument("--periods", type=int, default=60)
    p.add_argument("--initial-price", type=float, default=5.0)
    p.add_argument("--liquidity", type=float, default=None, help="price impact scale (default 10*agents)")
    p.add_argument(
        "--force-constant",
        choices=["+1", "-1", "1", "buy", "sell"],
        default=None,
        help="give every agent a single constant strategy",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="slaved ensemble, success table and predictions for a series")
    _add_common(p)
    _add_ensemble_options(p, default_runs=1000)
    p.add_argument("series", type=Path)
    p.add_argument("--thresholds", type=str, default=None, help="grid start:step:stop (default 0.2:0.02:0.4)")
    p.add_argument("--threshold", type=float, default=0.2, help="threshold for the predictions file")
    p.add_argument("--target-offset", type=int, default=1, help="periods ahead the prediction targets")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("predict", help="threshold predictions for a series")
    _add_common(p)
    _add_ensemble_options(p, default_runs=1000)
    p.add_argument("series", type=Path)
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--target-offset", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bootstrap", help="replica confidence bands around ensemble realizations")
    _add_common(p)
    _add_ensemble_options(p, default_runs=100)
    p.add_argument("series", type=Path)
    p.add_argument("--outer", type=int, default=10)
    p.add_argument("--inner", type=int, default=10)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("serve", help="run a live session server until settlement")
    _add_common(p)
    p.add_argument("--host", type=str, default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--port-file", type=Path, default=None, help="write the bound port here")
    p.add_argument("--static", type=Path, default=None, help="directory of client assets to serve")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="rebuild the price series from a session log")
    _add_common(p)
    p.add_argument("log", type=Path)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (SeriesParseError, NewsLoadError, ReplayError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except InvalidInputError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except MarketLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
