"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure that aborted every method.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    ConfigError,
    DataError,
    ExperimentConfig,
    NumericalFailure,
    load_config,
    rank_methods,
    read_numeric_column,
    run_real,
    run_sliding_windows,
    run_synthetic,
)
from .report import (
    BenchmarkReport,
    emit_report,
    emit_window_report,
    load_metrics,
    write_plot_data,
    write_ranking_csv,
)
from .vitals import write_vitals_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _int_tuple(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_tuple(text: str) -> tuple:
    return tuple(t.strip() for t in text.split(",") if t.strip())


# flag dest -> ExperimentConfig field
_OVERRIDES = {
    "seed": "seed",
    "families": "families",
    "n_samples": "n_samples",
    "eval_fraction": "eval_fraction",
    "methods": "classical_methods",
    "orders": "dpr_orders",
    "backends": "dpr_backends",
    "train_points": "dpr_train_points",
    "repeats": "timing_repeats",
    "desk": "desk_scale",
    "out": "output_dir",
    "real_orders": "real_orders",
    "window_size": "window_size",
    "n_windows": "n_windows",
    "stride": "window_stride",
    "window_orders": "window_orders",
}


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--desk", action="store_const", const=True, default=None,
                   help="desk scale: ten times fewer samples and evaluation points")
    p.add_argument("--n-samples", type=int)
    p.add_argument("--eval-fraction", type=float)
    p.add_argument("--families", type=_str_tuple)
    p.add_argument("--methods", type=_str_tuple, help="classical methods to include")
    p.add_argument("--orders", type=_int_tuple, help="DPR orders, e.g. 3,4,5")
    p.add_argument("--backends", type=_str_tuple, help="DPR backends: kde,hde")
    p.add_argument("--train-points", type=int, help="DPR-KDE training grid size")
    p.add_argument("--repeats", type=int, help="timing repetitions")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dprdensity", description="Density estimation benchmark harness.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthetic", help="run the six-family synthetic benchmark")
    _add_experiment_flags(p)

    p = sub.add_parser("real", help="evaluate on one numeric CSV column")
    _add_experiment_flags(p)
    p.add_argument("--csv", required=True)
    p.add_argument("--column", help="header name or zero-based index")
    p.add_argument("--real-orders", type=_int_tuple)

    p = sub.add_parser("windows", help="sliding-window study on one CSV column")
    _add_experiment_flags(p)
    p.add_argument("--csv", required=True)
    p.add_argument("--column")
    p.add_argument("--window-size", type=int)
    p.add_argument("--n-windows", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--window-orders", type=_int_tuple)
    p.add_argument("--secondary", choices=("SciPyKDE", "KDE"), default="SciPyKDE")

    p = sub.add_parser("rank", help="rank methods from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True, help="ranking CSV path")

    p = sub.add_parser("plotdata", help="write metric plot-data TSVs from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("vitals", help="write a synthetic vital-signs CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=300_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    changes = {}
    for dest, name in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            changes[name] = value
    try:
        return replace(cfg, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(cfg: ExperimentConfig, default: str) -> Path:
    return Path(cfg.output_dir or default)


def _run(args) -> int:
    if args.command == "vitals":
        if args.n < 1:
            raise ConfigError("--n must be positive")
        print(write_vitals_csv(args.out, args.n, args.seed))
        return EXIT_OK
    if args.command in ("rank", "plotdata"):
        try:
            rows = load_metrics(args.metrics)
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"cannot read metrics {args.metrics}: {exc}") from exc
        rows = [r for r in rows if r.status != "baseline"]
        if len({r.method for r in rows}) < 2:
            raise DataError("ranking needs at least two methods")
        table = rank_methods(rows)
        if args.command == "rank":
            print(write_ranking_csv(table, args.out))
        else:
            report = BenchmarkReport("metrics", ExperimentConfig(), rows)
            for p in write_plot_data(report, args.out, table):
                print(p)
        return EXIT_OK

    cfg = config_from_args(args)
    if args.command == "synthetic":
        report = run_synthetic(cfg)
        paths = emit_report(report, _out_dir(cfg, "results/synthetic"))
    elif args.command == "real":
        report = run_real(args.csv, args.column, cfg)
        paths = emit_report(report, _out_dir(cfg, "results/real"))
        skipped = sum(d["skipped_rows"] for d in report.datasets.values())
        print(f"skipped rows: {skipped}")
    else:
        values, skipped = read_numeric_column(args.csv, args.column)
        study = run_sliding_windows(values, cfg, secondary=args.secondary)
        paths = emit_window_report(study, _out_dir(cfg, "results/windows"))
        for name, t in study.tests.items():
            print(f"{name}: statistic={t.statistic:g} p={t.p_value:.3g} ({t.method})")
    for p in paths:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
