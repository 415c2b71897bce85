"""Report emission: metrics/ranking CSVs, run manifest, plot-data TSVs, model files."""

from __future__ import annotations

import csv
import json
import math
import platform
import re
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
import scipy

from .dpr import save_model
from .harness import RANK_METRICS, RANK_WEIGHTS, BenchmarkReport, RankingTable, WindowStudy, rank_methods
from .metrics import JSD_LOG_BASE, MetricRow

TIME_COLUMNS = ("train_ms", "infer_ms")

CONVENTIONS = {
    "jsd_log_base": JSD_LOG_BASE,
    "jsd_inputs": "both vectors renormalized to unit sum",
    "iqr": "numpy linear-interpolation percentiles (type 7)",
    "sample_std": "population (N denominator)",
    "ranking_aggregation": "mean of per-dataset ranks",
    "ranking_scale": "min-max over methods present, mapped to [1, 15]",
    "ranking_weights": RANK_WEIGHTS,
    "timing": "monotonic clock, warm-up excluded, median of repeats",
    "wall_times": "hardware dependent; reported, never asserted",
}


class ReportError(OSError):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def _writer(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc


def write_metrics_csv(rows, path, include_times: bool = True) -> Path:
    path = Path(path)
    cols = [c for c in MetricRow.columns() if include_times or c not in TIME_COLUMNS]
    with _writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in cols])
    return path


def load_metrics(path) -> list[MetricRow]:
    types = {f.name: f.type for f in fields(MetricRow)}
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {k: (float(v) if types[k] in ("float", float) else v) for k, v in rec.items()}
            out.append(MetricRow(**kw))
    return out


def write_ranking_csv(table: RankingTable, path) -> Path:
    path = Path(path)
    with _writer(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *[f"rank_{m}" for m in RANK_METRICS], "global_score", "global_rank"])
        for m in table.order():
            w.writerow([m, *[_fmt(table.metric_ranks[m][k]) for k in RANK_METRICS],
                        _fmt(table.global_score[m]), _fmt(table.global_rank[m])])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def versions() -> dict:
    return {"python": sys.version.split()[0], "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": platform.platform()}


def write_manifest(path, kind: str, config, extra: dict | None = None) -> Path:
    path = Path(path)
    record = {
        "kind": kind,
        "seed": config.seed,
        "config": config.to_dict(),
        "versions": versions(),
        "conventions": CONVENTIONS,
    }
    if extra:
        record.update(extra)
    with _writer(path) as fh:
        json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_tsv(path: Path, header, columns) -> Path:
    with _writer(path) as fh:
        fh.write("\t".join(header) + "\n")
        for row in zip(*columns):
            fh.write("\t".join(_fmt(v) if isinstance(v, (str, int)) else _fmt(float(v)) for v in row) + "\n")
    return path


def write_plot_data(report: BenchmarkReport, directory, ranking: RankingTable | None = None) -> list[Path]:
    """Tab-separated series: one density panel per dataset, one metric panel per metric."""
    d = Path(directory)
    paths = []
    for dataset, curves in report.densities.items():
        names = [k for k in curves if k != "x"]
        paths.append(_write_tsv(d / f"density_{_safe(dataset)}.tsv", ["x", *names],
                                [curves["x"], *[curves[n] for n in names]]))
    datasets = list(report.densities) or sorted({r.dataset for r in report.rows})
    methods = report.methods
    for metric in ("auc", "jsd", "mse", "pearson_r", "train_ms", "infer_ms"):
        cols = [[m for m in methods]]
        for ds in datasets:
            vals = []
            for m in methods:
                try:
                    vals.append(getattr(report.row(m, ds), metric))
                except KeyError:
                    vals.append(math.nan)
            cols.append(vals)
        paths.append(_write_tsv(d / f"metric_{metric}.tsv", ["method", *datasets], cols))
    if ranking is not None:
        order = ranking.order()
        cols = [order, *[[ranking.metric_ranks[m][k] for m in order] for k in RANK_METRICS],
                [ranking.global_rank[m] for m in order]]
        paths.append(_write_tsv(d / "ranking.tsv", ["method", *RANK_METRICS, "global_rank"], cols))
    return paths


def emit_report(report: BenchmarkReport, directory, ranking: RankingTable | None = None) -> list[Path]:
    d = Path(directory)
    paths = [write_metrics_csv(report.rows, d / "metrics.csv"),
             write_metrics_csv(report.rows, d / "metrics_notime.csv", include_times=False)]
    if ranking is None and report.kind == "synthetic" and len(report.methods) >= 2:
        ranking = rank_methods(report.rows)
    if ranking is not None:
        paths.append(write_ranking_csv(ranking, d / "ranking.csv"))
    paths.extend(write_plot_data(report, d / "plotdata", ranking))
    for (method, dataset), model in sorted(report.models.items()):
        p = d / "models" / f"{_safe(dataset)}__{_safe(method)}.json"
        p.parent.mkdir(parents=True, exist_ok=True)
        save_model(model, p)
        paths.append(p)
    paths.append(write_manifest(d / "manifest.json", report.kind, report.config,
                                {"datasets": report.datasets}))
    return paths


def emit_window_report(study: WindowStudy, directory) -> list[Path]:
    d = Path(directory)
    paths = []
    p = d / "windows.csv"
    with _writer(p) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "method", "jsd", "train_ms", "infer_ms"])
        for rec in study.windows:
            w.writerow([rec.window, rec.method, _fmt(rec.jsd), _fmt(rec.train_ms), _fmt(rec.infer_ms)])
    paths.append(p)
    p = d / "tests.csv"
    with _writer(p) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "statistic", "p_value", "n_effective", "method", "alternative"])
        for name, t in study.tests.items():
            w.writerow([name, _fmt(t.statistic), _fmt(t.p_value), t.n_effective, t.method, t.alternative])
    paths.append(p)
    methods = sorted({rec.method for rec in study.windows})
    cols = [list(range(study.n_windows))]
    for m in methods:
        cols.append(list(study.jsd_of(m)))
    paths.append(_write_tsv(d / "plotdata" / "window_jsd.tsv", ["window", *methods], cols))
    paths.append(write_manifest(d / "manifest.json", "windows", study.config, {
        "window_size": study.window_size, "n_windows": study.n_windows, "stride": study.stride,
        "batch_ms": study.batch_ms}))
    return paths
