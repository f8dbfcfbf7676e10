"""Command-line entry point: ``lpwa-ucb simulate | validate-approx | analytic``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from functools import partial
from importlib import resources
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
import yaml

from . import analytic, metrics
from .engine import ReplicationResult, merge_results, run_replication
from .model import ALL_STRATEGIES, ConfigError, ScenarioConfig, Strategy, validate_config

log = logging.getLogger("lpwa_ucb")

SERIES_HEADER = ["slot_bucket", "strategy", "mean_rate", "stderr", "n_reps", "mean_packet_rate"]
SUMMARY_HEADER = ["strategy", "final_rate", "stderr", "n_reps", "final_packet_rate"]
VALIDATE_HEADER = ["N", "pc_sim", "pc1_sim", "pc1_approx", "abs_err"]
DEFAULT_WINDOW = 10_000
DEFAULT_REPS = 10

REQUIRED_KEYS = ("n_devices", "n_channels", "tx_prob", "max_attempts", "backoff_window", "occupancy")
INT_KEYS = ("n_devices", "n_channels", "max_attempts", "backoff_window", "delay_threshold",
            "horizon", "replications", "master_seed")
FLOAT_KEYS = ("tx_prob", "alpha")


class ScenarioParseError(ValueError):
    pass


def _as_int(key: str, value) -> int:
    if isinstance(value, bool):
        raise ScenarioParseError(f"{key}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{key}: expected an integer, got {value!r}") from None
    if not number.is_integer():
        raise ScenarioParseError(f"{key}: expected an integer, got {value!r}")
    return int(number)


def _as_float(key: str, value) -> float:
    if isinstance(value, bool):
        raise ScenarioParseError(f"{key}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{key}: expected a number, got {value!r}") from None


def config_from_mapping(data: dict) -> ScenarioConfig:
    known = {f.name for f in fields(ScenarioConfig)}
    for key in data:
        if key not in known:
            raise ScenarioParseError(f"unknown key {key!r}")
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ScenarioParseError(f"missing required key(s): {', '.join(missing)}")
    values = {}
    for key, value in data.items():
        if key in INT_KEYS:
            values[key] = None if value is None and key == "delay_threshold" else _as_int(key, value)
        elif key in FLOAT_KEYS:
            values[key] = _as_float(key, value)
        elif key == "occupancy":
            if not isinstance(value, (list, tuple)):
                raise ScenarioParseError(f"occupancy: expected a list, got {value!r}")
            values[key] = tuple(_as_float("occupancy", v) for v in value)
        elif key == "strategy":
            values[key] = Strategy.parse(str(value))
        elif key == "freeze_channel":
            if not isinstance(value, bool):
                raise ScenarioParseError(f"freeze_channel: expected true/false, got {value!r}")
            values[key] = value
    return validate_config(ScenarioConfig(**values))


def builtin_scenarios() -> List[str]:
    root = resources.files("lpwa_ucb") / "scenarios"
    return sorted(p.name.rsplit(".", 1)[0] for p in root.iterdir() if p.name.endswith(".yaml"))


def _resolve_config_path(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    if str(path) in builtin_scenarios():
        return Path(str(resources.files("lpwa_ucb") / "scenarios" / f"{path}.yaml"))
    raise FileNotFoundError(f"no such scenario file or built-in scenario: {path}")


def parse_scenario(path) -> ScenarioConfig:
    """Read a flat ``key: value`` scenario file; unknown keys are rejected."""
    p = _resolve_config_path(path)
    text = p.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ScenarioParseError(f"{p}: {where}: {exc.problem}") from None
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{p}: expected key: value pairs")
    try:
        return config_from_mapping(data)
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{p}: {exc}") from None


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _write_rows(path: Path, header: Sequence[str], rows, delimiter: str = ",") -> None:
    with open(path, "w", newline="") as fh:
        if delimiter == ",":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([_fmt(v) for v in row] for row in rows)
        else:
            fh.write("# " + " ".join(header) + "\n")
            for row in rows:
                fh.write(" ".join(_fmt(v).replace(" ", "_") for v in row) + "\n")


def run_many(cfg: ScenarioConfig, reps: int, workers: int,
             summarize: Callable[[ReplicationResult], object]) -> list:
    """Run replications 0..reps-1 and return ``summarize(result)`` in replication order."""
    job = partial(_run_and_summarize, cfg, summarize)
    if workers <= 1 or reps <= 1:
        return [job(r) for r in range(reps)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(reps)))


def _run_and_summarize(cfg, summarize, rep_index):
    return summarize(run_replication(cfg, rep_index))


@dataclass
class RepSummary:
    series: metrics.Series
    packet_series: metrics.Series
    cumulative: metrics.Series
    final_rate: float
    final_packet_rate: float


def summarize_for_curves(window: int, res: ReplicationResult) -> RepSummary:
    return RepSummary(
        metrics.windowed_rate(res, window),
        metrics.windowed_packet_rate(res, window),
        metrics.cumulative_rate(res, window),
        metrics.tail_rate(res),
        metrics.tail_packet_rate(res),
    )


def summarize_counters(res: ReplicationResult) -> ReplicationResult:
    # drop the per-slot arrays, keep only the pooled counters
    return ReplicationResult(
        attempts=np.array([res.attempts.sum()]),
        successes=np.array([res.successes.sum()]),
        drops=np.array([res.drops.sum()]),
        first_attempt_count=res.first_attempt_count,
        first_attempt_collisions=res.first_attempt_collisions,
        second_attempt_count=res.second_attempt_count,
        second_attempt_collisions=res.second_attempt_collisions,
        dropped_packets=res.dropped_packets,
        generated_packets=res.generated_packets,
        in_flight=res.in_flight,
        max_packet_attempts=res.max_packet_attempts,
    )


def simulate_strategy(cfg: ScenarioConfig, reps: int, window: int, workers: int) -> List[RepSummary]:
    return run_many(cfg, reps, workers, partial(summarize_for_curves, window))


def _series_rows(strategy: Strategy, summaries: List[RepSummary], cumulative: bool = False):
    rates = metrics.aggregate([s.cumulative if cumulative else s.series for s in summaries])
    packet = metrics.aggregate([s.packet_series for s in summaries])
    return [
        [pt.slot_bucket, strategy.value, pt.mean_rate, pt.stderr, pt.n_reps, pk.mean_rate]
        for pt, pk in zip(rates, packet)
    ]


def cmd_simulate(config, out: Path, seed: Optional[int] = None, reps: Optional[int] = None,
                 strategies: Optional[Sequence[Strategy]] = None, window: int = DEFAULT_WINDOW,
                 workers: int = 1, delay: Optional[int] = None, horizon: Optional[int] = None,
                 gnuplot: bool = False) -> dict:
    """Run every requested strategy and write per-strategy series CSVs plus ``summary.csv``."""
    cfg = config if isinstance(config, ScenarioConfig) else parse_scenario(config)
    changes = {}
    if seed is not None:
        changes["master_seed"] = seed
    if reps is not None:
        changes["replications"] = reps
    if delay is not None:
        changes["delay_threshold"] = delay
    if horizon is not None:
        changes["horizon"] = horizon
    cfg = validate_config(cfg.replace(**changes))
    strategies = list(strategies) if strategies else list(ALL_STRATEGIES)
    window = min(window, cfg.horizon)

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")

    summary_rows = []
    results = {}
    for strategy in strategies:
        scfg = cfg.replace(strategy=strategy)
        log.info("simulating %s: %d replications of %d slots", strategy.value, cfg.replications, cfg.horizon)
        summaries = simulate_strategy(scfg, cfg.replications, window, workers)
        results[strategy] = summaries
        rows = _series_rows(strategy, summaries)
        _write_rows(out / f"series_{strategy.slug}.csv", SERIES_HEADER, rows)
        _write_rows(out / f"cumulative_{strategy.slug}.csv", SERIES_HEADER,
                    _series_rows(strategy, summaries, cumulative=True))
        if gnuplot:
            _write_rows(out / f"series_{strategy.slug}.dat", SERIES_HEADER, rows, delimiter=" ")
        mean, stderr, n = metrics.mean_stderr([s.final_rate for s in summaries])
        packet_mean, _, _ = metrics.mean_stderr([s.final_packet_rate for s in summaries])
        summary_rows.append([strategy.value, mean, stderr, n, packet_mean])
    _write_rows(out / "summary.csv", SUMMARY_HEADER, summary_rows)
    return {"config": cfg, "summary": summary_rows, "results": results}


def validation_config(n_devices: int, horizon: int = 200_000, seed: int = 0, max_attempts: int = 10,
                      backoff_window: int = 10, tx_prob: float = 1e-3) -> ScenarioConfig:
    return ScenarioConfig(
        n_devices=n_devices, n_channels=1, tx_prob=tx_prob, max_attempts=max_attempts,
        backoff_window=backoff_window, occupancy=(0.0,), strategy=Strategy.NO_LEARNING,
        horizon=horizon, master_seed=seed,
    )


def cmd_validate_approx(n_values: Sequence[int], out: Optional[Path] = None, reps: int = DEFAULT_REPS,
                        seed: int = 0, horizon: int = 200_000, max_attempts: int = 10,
                        backoff_window: int = 10, tx_prob: float = 1e-3, workers: int = 1,
                        gnuplot: bool = False) -> List[list]:
    """Simulated vs approximated collision probability at the first retransmission, per N."""
    rows = []
    for n in n_values:
        if not (2 <= n <= 100_000):
            raise ConfigError(f"N must lie in [2, 100000], got {n}")
        cfg = validate_config(validation_config(n, horizon, seed, max_attempts, backoff_window, tx_prob))
        pooled = merge_results(run_many(cfg, reps, workers, summarize_counters))
        pc_sim, pc1_sim = metrics.collision_estimates(pooled)
        pc1_approx = analytic.p_c1_approx(pc_sim, n, backoff_window) if 0 < pc_sim < 1 else math.nan
        rows.append([n, pc_sim, pc1_sim, pc1_approx, abs(pc1_sim - pc1_approx)])
        log.info("N=%d pc=%.4f pc1=%.4f approx=%.4f", n, pc_sim, pc1_sim, pc1_approx)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "validate_approx.csv", VALIDATE_HEADER, rows)
        if gnuplot:
            _write_rows(out / "validate_approx.dat", VALIDATE_HEADER, rows, delimiter=" ")
    return rows


def cmd_analytic(p_c: float, n_devices: int, m: int) -> dict:
    x = analytic.x_from_pc(p_c, n_devices)
    exact = analytic.p_ca_exact(p_c, n_devices, m)
    closed = analytic.p_ca_closed(p_c, n_devices, m)
    pc1 = analytic.p_c1_approx(p_c, n_devices, m)
    return {"x": x, "p_ca_exact": exact, "p_ca_closed": closed,
            "p_ca_difference": closed - exact, "p_c1_approx": pc1, "gap": pc1 - p_c}


def _parse_n_values(args) -> List[int]:
    if args.n:
        return [int(v) for v in args.n.split(",")]
    return list(range(args.n_min, args.n_max + 1, args.step))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpwa-ucb", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario for one or more strategies")
    sim.add_argument("--config", required=True,
                     help="scenario file, or a built-in name (scenario1, scenario2)")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--out", default="results")
    sim.add_argument("--strategies", help="comma-separated, e.g. 'Only UCB,Random' or only_ucb,random")
    sim.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--delay", type=int, help="delay threshold in slots for Delayed UCB")
    sim.add_argument("--horizon", type=int, help="override the number of slots")
    sim.add_argument("--gnuplot", action="store_true")

    val = sub.add_parser("validate-approx", help="compare simulated and approximated p_c1")
    val.add_argument("--n", help="comma-separated list of N (overrides the range)")
    val.add_argument("--n-min", type=int, default=50)
    val.add_argument("--n-max", type=int, default=400)
    val.add_argument("--step", type=int, default=50)
    val.add_argument("--reps", type=int, default=DEFAULT_REPS)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--horizon", type=int, default=200_000)
    val.add_argument("--max-attempts", type=int, default=10)
    val.add_argument("--backoff-window", type=int, default=10)
    val.add_argument("--tx-prob", type=float, default=1e-3)
    val.add_argument("--workers", type=int, default=1)
    val.add_argument("--out", default="results")
    val.add_argument("--gnuplot", action="store_true")

    ana = sub.add_parser("analytic", help="evaluate the closed-form collision probabilities")
    ana.add_argument("--pc", type=float, required=True)
    ana.add_argument("--n", type=int, required=True)
    ana.add_argument("--m", type=int, required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            strategies = None
            if args.strategies:
                strategies = [Strategy.parse(s) for s in args.strategies.split(",")]
            res = cmd_simulate(args.config, Path(args.out), seed=args.seed, reps=args.reps,
                               strategies=strategies, window=args.window, workers=args.workers,
                               delay=args.delay, horizon=args.horizon, gnuplot=args.gnuplot)
            for row in res["summary"]:
                print(f"{row[0]:>12}  final rate {row[1]:.4f} +/- {row[2]:.4f}  (n={row[3]})")
        elif args.command == "validate-approx":
            rows = cmd_validate_approx(_parse_n_values(args), Path(args.out), reps=args.reps,
                                       seed=args.seed, horizon=args.horizon,
                                       max_attempts=args.max_attempts,
                                       backoff_window=args.backoff_window, tx_prob=args.tx_prob,
                                       workers=args.workers, gnuplot=args.gnuplot)
            print("  ".join(f"{h:>10}" for h in VALIDATE_HEADER))
            for row in rows:
                print(f"{row[0]:>10}  " + "  ".join(f"{v:>10.4f}" for v in row[1:]))
        else:
            table = cmd_analytic(args.pc, args.n, args.m)
            for key, value in table.items():
                print(f"{key:>16}  {value:.6f}")
    except (ConfigError, ScenarioParseError, analytic.DomainError, metrics.InsufficientData,
            FileNotFoundError, PermissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
