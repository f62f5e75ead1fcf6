"""Command-line runner: ``discdrift run CONFIG`` and ``discdrift catalog``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .atlas import atlas_model, occupation_deviation, simulate_market
from .config import ExperimentConfig, parse_config
from .errors import ConfigError, ParameterError
from .model import CATALOG, classify
from .study import (
    ConvergenceStudyConfig,
    error_evolution,
    histogram_from_errors,
    run_convergence,
    sample_paths,
    stationary_check,
)


def format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _study(cfg: ExperimentConfig, exponents=None) -> ConvergenceStudyConfig:
    return ConvergenceStudyConfig(
        spec=cfg.sde(),
        scheme=cfg.scheme,
        fine_exponent=cfg.fine_exponent,
        coarse_exponents=tuple(cfg.coarse_exponents if exponents is None else exponents),
        replications=cfg.replications,
        master_seed=cfg.master_seed,
        regression_window=cfg.regression_window if exponents is None else None,
        batch_size=cfg.batch_size,
    )


# each runner returns (results for summary.json, {file name: csv text})


def _converge(cfg, threads):
    report = run_convergence(_study(cfg), threads)
    rows = report.rows()
    header = list(rows[0])
    results = report.summary()
    results["rmse"] = list(report.rmse)
    return results, {"convergence.csv": csv_text(header, ([r[h] for h in header] for r in rows))}


def _evolution(cfg, threads):
    exponent = cfg.evolution.coarse_exponent
    ev = error_evolution(_study(cfg, (exponent,)), exponent, cfg.evolution.samples, threads)
    results = {
        "coarse_exponent": ev.exponent,
        "samples": cfg.evolution.samples,
        "terminal_rmse": ev.rmse[-1],
        "max_rmse": ev.rmse.max(),
        "mean_drift_changes": ev.mean_changes,
        "frequent_change_times": ev.frequent_change_times,
        "modal_change_times": ev.modal_change_times,
        "first_change_reference": ev.first_change_reference,
        "first_change_scheme": ev.first_change_scheme,
    }
    files = {
        "evolution.csv": csv_text(["time", "rmse"], zip(ev.times, ev.rmse)),
        "drift_changes.csv": csv_text(["time", "count"], zip(ev.change_times, ev.change_counts)),
    }
    return results, files


def _histogram(cfg, threads):
    report = run_convergence(_study(cfg), threads)
    rows, per_exponent = [], []
    for j, e in enumerate(report.exponents):
        hist = histogram_from_errors(report.terminal_errors[j], e, cfg.histogram.bin_width)
        for lo, hi, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            rows.append((e, lo, hi, count))
        summary_row = report.rows()[j]
        per_exponent.append({
            "exponent": e,
            "underflow": hist.underflow,
            "rmse": report.rmse[j],
            "max_terminal_error": summary_row["max_terminal_error"],
            "min_terminal_error": summary_row["min_terminal_error"],
            "max_path_error": summary_row["max_path_error"],
            "min_path_error": summary_row["min_path_error"],
        })
    results = {"bin_width": cfg.histogram.bin_width, "exponents": per_exponent}
    text = csv_text(["exponent", "log2_error_lower", "log2_error_upper", "count"], rows)
    return results, {"histogram.csv": text}


def _stationary(cfg, threads):
    opts = cfg.stationary
    checks = [
        stationary_check(cfg.drift_object(), opts.step, opts.burn_in, opts.chain_length,
                         opts.probes, cfg.master_seed, x0, chain_index=i)
        for i, x0 in enumerate(opts.initial_values)
    ]
    first = checks[0]
    spread = 0.0
    for a in checks:
        for b in checks:
            spread = max(spread, float(np.max(np.abs(a.ecdf - b.ecdf))))
    results = {
        "invariant_second_moment": first.invariant_second_moment,
        "max_ecdf_distance_between_chains": spread,
        "chains": [
            {
                "initial_value": c.initial_value,
                "sup_distance": c.sup_distance,
                "ergodic_second_moment": c.ergodic_second_moment,
            }
            for c in checks
        ],
    }
    header = ["x", "invariant_cdf"] + [f"ecdf_chain_{i + 1}" for i in range(len(checks))]
    rows = (
        [x, f] + [c.ecdf[j] for c in checks]
        for j, (x, f) in enumerate(zip(first.probes, first.cdf))
    )
    return results, {"stationary.csv": csv_text(header, rows)}


def _atlas(cfg, threads):
    opts = cfg.atlas
    model = atlas_model(opts.d, opts.g, opts.sigma, tuple(opts.initial_log_caps))
    d = opts.d
    rows, blocks = [], []
    for horizon in opts.horizons:
        occ = simulate_market(model, horizon, opts.step, opts.replications, cfg.master_seed,
                              threads=threads)
        dev = occupation_deviation(occ)
        for k in range(d):
            rows.append([horizon, k + 1] + list(occ.rates[:, k]) + list(dev))
        blocks.append({"horizon": horizon, "occupation_by_rank": occ.rates.T, "quadratic_deviations": dev})
    header = (["horizon", "rank"] + [f"firm_{i + 1}" for i in range(d)]
              + [f"deviation_firm_{i + 1}" for i in range(d)])
    results = {"step": opts.step, "replications": opts.replications, "blocks": blocks}
    return results, {"atlas.csv": csv_text(header, rows)}


def _paths(cfg, threads):
    count = cfg.paths.count
    values = sample_paths(cfg.sde(), count, cfg.fine_exponent, cfg.master_seed)
    times = cfg.horizon * np.arange(values.shape[0]) / 2**cfg.fine_exponent
    header = ["time"] + [f"path_{i + 1}" for i in range(count)]
    rows = ([t] + row for t, row in zip(times, values.tolist()))
    results = {"count": count, "fine_exponent": cfg.fine_exponent, "rows": values.shape[0],
               "terminal_mean": values[-1].mean()}
    return results, {"paths.csv": csv_text(header, rows)}


RUNNERS = {
    "converge": _converge,
    "evolution": _evolution,
    "histogram": _histogram,
    "stationary": _stationary,
    "atlas": _atlas,
    "paths": _paths,
}


_OPTION_BLOCKS = ("evolution", "histogram", "paths", "stationary", "atlas")


def _echo(cfg: ExperimentConfig) -> dict:
    # the output location is not part of the experiment, so reruns elsewhere stay byte-identical
    unused = {b for b in _OPTION_BLOCKS if b != cfg.experiment} | {"output_dir"}
    return cfg.model_dump(mode="json", by_alias=True, exclude=unused)


def run_experiment(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> dict:
    """Run ``cfg`` and write ``summary.json`` plus its CSV files into ``out_dir``."""
    results, files = RUNNERS[cfg.experiment](cfg, threads)
    summary = {
        "version": __version__,
        "experiment": cfg.experiment,
        "seed": cfg.master_seed,
        "config": _echo(cfg),
        "results": results,
        "artifacts": sorted(files),
    }
    summary = _jsonable(summary)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8", newline="")
    with open(out_dir / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return summary


def _u64(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discdrift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a JSON config")
    run.add_argument("config", help="path to the JSON experiment config")
    run.add_argument("--seed", type=_u64, help="override master_seed")
    run.add_argument("--out", help="override output_dir")
    run.add_argument("--threads", type=_positive, default=1, help="worker threads (results do not depend on it)")
    sub.add_parser("catalog", help="list the named test drifts")
    return parser


def _catalog() -> int:
    for name, drift in CATALOG.items():
        direction = classify(drift)
        bps = ",".join(format(b, "g") for b in drift.breakpoints)
        vals = ",".join(format(v, "g") for v in drift.values)
        print(f"{name}\tbreakpoints=[{bps}]\tvalues=[{vals}]\t{direction.kind.value}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        return _catalog()
    try:
        data = Path(args.config).read_bytes()
    except OSError as exc:
        print(f"discdrift: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(data)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        if overrides:
            cfg = cfg.model_copy(update=overrides)
    except ConfigError as exc:
        print(f"discdrift: invalid config {args.config}: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_experiment(cfg, Path(cfg.output_dir), args.threads)
    except ParameterError as exc:
        print(f"discdrift: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"discdrift: cannot write results: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(summary['artifacts'] + ['summary.json'])} to {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
