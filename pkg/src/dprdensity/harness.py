"""Experiment runner: synthetic benchmark, ranking, real-data study, sliding windows."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import gaussian_kde, rankdata

from .baseline import (
    FAMILIES,
    ALDParams,
    DistributionSpec,
    Grid,
    GriddedDensity,
    MWrightParams,
    SkewNormalParams,
    make_baseline,
)
from .dpr import DPRConfig, DPRFitError, DPRModel, dpr_eval, dpr_train
from .estimators import (
    HDEConfig,
    fit_normal,
    fit_pearson1,
    hde_fit,
    kde_eval,
    kde_fit,
    normal_pdf,
    pearson1_pdf,
    pearson_discriminant,
)
from .metrics import MetricRow, compare, jsd
from .sampling import sample_family
from .stats_tests import TestResult, mann_whitney_less, wilcoxon_less_than

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = "dprdensity-config/1"


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    """Every configured method failed."""


@dataclass(frozen=True)
class ParameterRanges:
    gaussian_mean: tuple = (-0.5, 0.5)
    gaussian_variance: tuple = (2.0, 3.0)
    skew_alpha: tuple = (2.0, 3.0)
    mwright_nu: tuple = (0.15, 0.35)
    amw1_lambda: tuple = (1.0, 2.0)
    amw2_alpha: tuple = (1.0, 2.0)
    ald_m: tuple = (-0.5, 0.5)
    ald_lambda: tuple = (1.0, 2.0)
    ald_kappa: tuple = (1.2, 1.8)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 20240601
    families: tuple = FAMILIES
    n_samples: int = 200_000
    eval_fraction: float = 0.05
    domain: tuple = (-10.0, 10.0)
    sampling_grid_points: int = 10_000
    classical_methods: tuple = ("Normal", "PearsonI", "HDE", "KDE", "SciPyKDE")
    dpr_orders: tuple = (3, 4, 5, 6, 7)
    dpr_backends: tuple = ("kde", "hde")
    dpr_train_points: int = 1000
    timing_repeats: int = 3
    desk_scale: bool = False
    output_dir: str | None = None
    ranges: ParameterRanges = field(default_factory=ParameterRanges)
    real_orders: tuple = (3, 4, 5)
    window_size: int = 1000
    n_windows: int = 300
    window_stride: int | None = None
    window_orders: tuple = (3, 4)
    window_train_points: int = 100
    window_eval_points: int = 100
    wilcoxon_threshold: float = 1e-6

    def __post_init__(self):
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ConfigError(f"unknown families: {sorted(unknown)}")
        bad = set(self.classical_methods) - set(CLASSICAL_METHODS)
        if bad:
            raise ConfigError(f"unknown methods: {sorted(bad)}")
        if set(self.dpr_backends) - {"kde", "hde"}:
            raise ConfigError("dpr_backends must be drawn from {'kde', 'hde'}")
        if self.n_samples < 10:
            raise ConfigError("n_samples must be at least 10")
        if not 0 < self.eval_fraction <= 1:
            raise ConfigError("eval_fraction must lie in (0, 1]")
        if self.timing_repeats < 1:
            raise ConfigError("timing_repeats must be at least 1")
        if any(o < 1 for o in self.dpr_orders + self.real_orders + self.window_orders):
            raise ConfigError("polynomial orders must be positive")
        lo, hi = self.domain
        if not hi > lo:
            raise ConfigError("domain must satisfy hi > lo")

    @property
    def effective_samples(self) -> int:
        return self.n_samples // 10 if self.desk_scale else self.n_samples

    @property
    def eval_points(self) -> int:
        return max(2, math.ceil(self.eval_fraction * self.effective_samples))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = CONFIG_SCHEMA
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        schema = d.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "ranges" in d and isinstance(d["ranges"], dict):
            d["ranges"] = ParameterRanges(**{k: tuple(v) for k, v in d["ranges"].items()})
        for key, value in list(d.items()):
            if isinstance(value, list):
                d[key] = tuple(value)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return ExperimentConfig.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# methods
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Method:
    name: str
    train: Callable | None
    infer: Callable


def _scipy_kde_infer(model, grid: Grid) -> GriddedDensity:
    return GriddedDensity(grid, np.maximum(model(grid.points), 0.0))


CLASSICAL_METHODS = {
    "Normal": Method("Normal", fit_normal, normal_pdf),
    "PearsonI": Method("PearsonI", fit_pearson1, pearson1_pdf),
    "HDE": Method("HDE", None, lambda x, g: hde_fit(x, HDEConfig(), g)),
    "KDE": Method("KDE", kde_fit, kde_eval),
    "SciPyKDE": Method("SciPyKDE", gaussian_kde, _scipy_kde_infer),
}


def dpr_method_name(backend: str, order: int) -> str:
    return f"DPR-{backend.upper()}({order})"


def dpr_method(backend: str, order: int, train_points: int | None) -> Method:
    cfg = DPRConfig(order=order, backend=backend,
                    eval_points=train_points if backend == "kde" else None)
    return Method(dpr_method_name(backend, order), lambda x: dpr_train(x, cfg), dpr_eval)


def methods_for(cfg: ExperimentConfig) -> list[Method]:
    out = [CLASSICAL_METHODS[m] for m in cfg.classical_methods]
    for backend in cfg.dpr_backends:
        for order in cfg.dpr_orders:
            out.append(dpr_method(backend, order, cfg.dpr_train_points))
    return out


def timed(fn: Callable, repeats: int):
    """Run ``fn``; with ``repeats > 1`` a warm-up call precedes the median of ``repeats``."""
    if repeats > 1:
        fn()
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return result, statistics.median(times)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class BenchmarkReport:
    kind: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    densities: dict = field(default_factory=dict)
    datasets: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)

    def row(self, method: str, dataset: str) -> MetricRow:
        for r in self.rows:
            if r.method == method and r.dataset == dataset:
                return r
        raise KeyError((method, dataset))

    @property
    def methods(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.method not in seen:
                seen.append(r.method)
        return seen


def _evaluate_method(method: Method, samples: np.ndarray, grid: Grid, reference: GriddedDensity,
                     dataset: str, repeats: int):
    row = MetricRow(method.name, dataset)
    try:
        if method.train is None:
            model, row.train_ms = samples, math.nan
        else:
            model, row.train_ms = timed(lambda: method.train(samples), repeats)
        est, row.infer_ms = timed(lambda: method.infer(model, grid), repeats)
    except DPRFitError as exc:
        logger.warning("%s on %s saturated: %s", method.name, dataset, exc)
        row.status = "saturated"
        return row, None, None
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.warning("%s on %s failed: %s", method.name, dataset, exc)
        row.status = "failed"
        return row, None, None
    for key, value in compare(est, reference).items():
        setattr(row, key, value)
    if not math.isfinite(row.auc):
        row.status = "saturated"
    return row, est, model


def family_seeds(seed: int) -> dict:
    """Independent (parameter rng, sampling seed) per family, stable under family subsets."""
    children = np.random.SeedSequence(seed).spawn(len(FAMILIES))
    out = {}
    for fam, child in zip(FAMILIES, children):
        param_seq, sample_seq = child.spawn(2)
        out[fam] = (np.random.default_rng(param_seq), int(sample_seq.generate_state(1, np.uint64)[0]))
    return out


def draw_spec(family: str, rng: np.random.Generator, ranges: ParameterRanges,
              domain=(-10.0, 10.0), seed: int | None = None) -> DistributionSpec:
    u = lambda bounds: float(rng.uniform(*bounds))  # noqa: E731
    if family.startswith("gaussian"):
        mu = u(ranges.gaussian_mean)
        sigma = math.sqrt(u(ranges.gaussian_variance))
        alpha = 0.0
        if family == "gaussian_right_skewed":
            alpha = u(ranges.skew_alpha)
        elif family == "gaussian_left_skewed":
            alpha = -u(ranges.skew_alpha)
        params = SkewNormalParams(mu, sigma, alpha)
    elif family == "amw1":
        params = MWrightParams(u(ranges.mwright_nu), u(ranges.amw1_lambda), "AMW1")
    elif family == "amw2":
        params = MWrightParams(u(ranges.mwright_nu), u(ranges.amw2_alpha), "AMW2")
    else:
        params = ALDParams(u(ranges.ald_m), u(ranges.ald_lambda), u(ranges.ald_kappa))
    return DistributionSpec(family, params, tuple(domain), seed)


def synthetic_dataset(family: str, cfg: ExperimentConfig):
    """Return ``(spec, samples)`` for one family under ``cfg``."""
    rng, sample_seed = family_seeds(cfg.seed)[family]
    spec = draw_spec(family, rng, cfg.ranges, cfg.domain, sample_seed)
    lo, hi = cfg.domain
    sgrid = Grid(float(lo), float(hi), cfg.sampling_grid_points)
    samples = sample_family(spec, cfg.effective_samples, sample_seed, sgrid)
    return spec, samples


def run_synthetic(cfg: ExperimentConfig) -> BenchmarkReport:
    report = BenchmarkReport("synthetic", cfg)
    lo, hi = cfg.domain
    grid = Grid(float(lo), float(hi), cfg.eval_points)
    methods = methods_for(cfg)
    for family in cfg.families:
        spec, sample_set = synthetic_dataset(family, cfg)
        x = sample_set.values
        baseline = make_baseline(spec, grid)
        moments = pearson_discriminant(x)
        report.datasets[family] = {
            "params": asdict(spec.params),
            "sample_seed": sample_set.seed,
            "n_samples": int(x.size),
            "pearson_beta1": moments.beta1,
            "pearson_beta2": moments.beta2,
            "pearson_kappa": moments.kappa_disc,
        }
        curves = {"x": grid.points, "baseline": baseline.values}
        for method in methods:
            row, est, model = _evaluate_method(method, x, grid, baseline, family, cfg.timing_repeats)
            report.rows.append(row)
            if est is not None:
                curves[method.name] = est.values
            if isinstance(model, DPRModel):
                report.models[(method.name, family)] = model
        report.densities[family] = curves
        logger.info("finished %s", family)
    if report.rows and all(r.status != "ok" for r in report.rows):
        raise NumericalFailure("every method failed on every dataset")
    return report


# ---------------------------------------------------------------------------
# ranking
# ---------------------------------------------------------------------------

RANK_METRICS = ("infer_ms", "auc", "jsd", "mse", "pearson_r")
RANK_WEIGHTS = {"infer_ms": 0.5, "auc": 1.0, "jsd": 1.0, "mse": 1.0, "pearson_r": 1.0}
RANK_SCALE = (1.0, 15.0)


@dataclass
class RankingTable:
    methods: list
    metric_ranks: dict
    global_score: dict
    global_rank: dict

    def order(self) -> list[str]:
        return sorted(self.methods, key=lambda m: (self.global_rank[m], m))


def _transform(metric: str, values: np.ndarray) -> np.ndarray:
    if metric in ("auc", "pearson_r"):
        return np.abs(1.0 - values)
    return values


def _clip_nonfinite(values: np.ndarray) -> np.ndarray:
    finite = np.isfinite(values)
    out = values.copy()
    if finite.all():
        return out
    fill = 2.0 * float(np.max(values[finite])) if finite.any() else 1.0
    out[~finite] = fill
    return out


def rank_methods(rows) -> RankingTable:
    """Mean per-dataset rank for each metric, then a weighted global score scaled to [1, 15]."""
    rows = list(rows)
    methods = sorted({r.method for r in rows})
    if len(methods) < 2:
        raise ValueError("ranking needs at least two methods")
    datasets = sorted({r.dataset for r in rows})
    sums = {m: {k: 0.0 for k in RANK_METRICS} for m in methods}
    counts = {m: {k: 0 for k in RANK_METRICS} for m in methods}
    for ds in datasets:
        present = sorted((r for r in rows if r.dataset == ds), key=lambda r: r.method)
        for metric in RANK_METRICS:
            vals = np.array([getattr(r, metric) for r in present], dtype=float)
            ranks = rankdata(_clip_nonfinite(_transform(metric, vals)))
            for r, rk in zip(present, ranks):
                sums[r.method][metric] += float(rk)
                counts[r.method][metric] += 1
    metric_ranks = {m: {k: sums[m][k] / counts[m][k] if counts[m][k] else math.nan
                        for k in RANK_METRICS} for m in methods}
    wsum = sum(RANK_WEIGHTS.values())
    score = {m: sum(RANK_WEIGHTS[k] * metric_ranks[m][k] for k in RANK_METRICS) / wsum
             for m in methods}
    lo, hi = min(score.values()), max(score.values())
    a, b = RANK_SCALE
    if hi > lo:
        grank = {m: a + (b - a) * (s - lo) / (hi - lo) for m, s in score.items()}
    else:
        grank = {m: a for m in methods}
    return RankingTable(methods, metric_ranks, score, grank)


# ---------------------------------------------------------------------------
# real data
# ---------------------------------------------------------------------------


def _to_float(text: str):
    try:
        v = float(text)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) else None


def read_numeric_column(path, column=None) -> tuple[np.ndarray, int]:
    """Read one numeric column of a CSV file; returns ``(values, skipped_rows)``.

    ``column`` may be a header name, an integer index, or ``None`` for the
    first column.  A first row whose selected field is not numeric is taken
    as a header.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path} is empty")
    index = 0
    start = 0
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        header = [h.strip() for h in rows[0]]
        if column not in header:
            raise DataError(f"column {column!r} not in header {header}")
        index = header.index(column)
        start = 1
    else:
        index = int(column) if column is not None else 0
        if rows[0] and index < len(rows[0]) and _to_float(rows[0][index]) is None:
            start = 1
    values = []
    skipped = 0
    for row in rows[start:]:
        if not row or all(not c.strip() for c in row):
            continue
        v = _to_float(row[index]) if index < len(row) else None
        if v is None:
            skipped += 1
        else:
            values.append(v)
    if not values:
        raise DataError(f"column {column!r} of {path} holds no numeric values")
    return np.asarray(values), skipped


def run_real(csv_path, column, cfg: ExperimentConfig) -> BenchmarkReport:
    values, skipped = read_numeric_column(csv_path, column)
    label = str(column) if column is not None else Path(csv_path).stem
    return run_real_values(values, label, cfg, skipped=skipped, source=str(csv_path))


def run_real_values(values, label: str, cfg: ExperimentConfig, skipped: int = 0,
                    source: str = "array") -> BenchmarkReport:
    x = np.asarray(values, dtype=float)
    if x.size < 10:
        raise DataError("need at least 10 numeric values")
    n_total = int(x.size)
    if cfg.desk_scale:
        # leading tenth keeps the file order, so repeated runs see the same rows
        x = x[: max(10, n_total // 10)]
    report = BenchmarkReport("real", cfg)
    m = max(2, math.ceil(cfg.eval_fraction * x.size))
    grid = Grid(float(x.min()), float(x.max()), m)

    kde = kde_fit(x)
    baseline, infer_ms = timed(lambda: kde_eval(kde, grid), cfg.timing_repeats)
    base_row = MetricRow("KDE", label, status="baseline", infer_ms=infer_ms)
    base_row.auc = compare(baseline, baseline)["auc"]
    report.rows.append(base_row)
    curves = {"x": grid.points, "baseline": baseline.values}

    methods = [Method("HDE", None, lambda s, g: hde_fit(s, HDEConfig(), g))]
    for backend in cfg.dpr_backends:
        for order in cfg.real_orders:
            methods.append(dpr_method(backend, order, cfg.dpr_train_points))
    for method in methods:
        row, est, model = _evaluate_method(method, x, grid, baseline, label, cfg.timing_repeats)
        report.rows.append(row)
        if est is not None:
            curves[method.name] = est.values
        if isinstance(model, DPRModel):
            report.models[(method.name, label)] = model
    report.densities[label] = curves
    report.datasets[label] = {"source": source, "n_samples": int(x.size), "n_rows_read": n_total,
                              "skipped_rows": skipped,
                              "eval_points": m, "kde_bandwidth": kde.bandwidth}
    return report


# ---------------------------------------------------------------------------
# sliding windows
# ---------------------------------------------------------------------------


@dataclass
class WindowReport:
    window: int
    method: str
    jsd: float
    train_ms: float
    infer_ms: float


@dataclass
class WindowStudy:
    windows: list
    tests: dict
    window_size: int
    n_windows: int
    stride: int
    batch_ms: dict
    config: ExperimentConfig

    def jsd_of(self, method: str) -> np.ndarray:
        return np.array([w.jsd for w in self.windows if w.method == method])


def window_slices(n_data: int, window_size: int, n_windows: int, stride: int | None = None):
    stride = window_size if stride is None else stride
    if stride < 1:
        raise ConfigError("stride must be positive")
    need = (n_windows - 1) * stride + window_size
    if n_data < need:
        raise DataError(f"need {need} values for {n_windows} windows of {window_size}, got {n_data}")
    return [slice(i * stride, i * stride + window_size) for i in range(n_windows)]


def _secondary_kde(name: str):
    if name == "KDE":
        return lambda x: kde_fit(x), kde_eval
    return gaussian_kde, _scipy_kde_infer


def run_sliding_windows(data, cfg: ExperimentConfig, window_size: int | None = None,
                        n_windows: int | None = None, stride: int | None = None,
                        secondary: str = "SciPyKDE") -> WindowStudy:
    """Per-window reference KDE versus a second KDE and the DPR variants.

    Returns per-window JSDs and the aggregate tests: a Wilcoxon test of the
    secondary-KDE JSDs against ``cfg.wilcoxon_threshold`` and, for each DPR
    backend, Mann-Whitney tests of each order against the next lower one.
    """
    data = np.asarray(data, dtype=float).ravel()
    window_size = window_size or cfg.window_size
    n_windows = n_windows or cfg.n_windows
    stride = stride if stride is not None else cfg.window_stride
    slices = window_slices(data.size, window_size, n_windows, stride)
    sec_train, sec_infer = _secondary_kde(secondary)
    sec_name = secondary if secondary != "KDE" else "KDE-copy"

    variants = []
    for backend in cfg.dpr_backends:
        for order in cfg.window_orders:
            variants.append(dpr_method(backend, order, cfg.window_train_points))

    records = []
    batch = {}

    def add(i, name, value, train_ms, infer_ms):
        records.append(WindowReport(i, name, value, train_ms, infer_ms))
        agg = batch.setdefault(name, {"train_ms": 0.0, "infer_ms": 0.0})
        agg["train_ms"] += train_ms if math.isfinite(train_ms) else 0.0
        agg["infer_ms"] += infer_ms if math.isfinite(infer_ms) else 0.0

    for i, sl in enumerate(slices):
        x = data[sl]
        grid = Grid(float(x.min()), float(x.max()), cfg.window_eval_points)
        ref_model, ref_train = timed(lambda: kde_fit(x), 1)
        reference, ref_infer = timed(lambda: kde_eval(ref_model, grid), 1)
        add(i, "KDE", 0.0, ref_train, ref_infer)

        sec_model, sec_train_ms = timed(lambda: sec_train(x), 1)
        sec, sec_infer_ms = timed(lambda: sec_infer(sec_model, grid), 1)
        add(i, sec_name, jsd(sec, reference), sec_train_ms, sec_infer_ms)

        for method in variants:
            row, est, _ = _evaluate_method(method, x, grid, reference, f"window{i}", 1)
            add(i, method.name, row.jsd if est is not None else math.nan, row.train_ms, row.infer_ms)

    study = WindowStudy(records, {}, window_size, n_windows,
                        stride if stride is not None else window_size, batch, cfg)
    sec_jsd = study.jsd_of(sec_name)
    try:
        study.tests[f"wilcoxon:{sec_name}<{cfg.wilcoxon_threshold:g}"] = wilcoxon_less_than(
            sec_jsd, cfg.wilcoxon_threshold)
    except ValueError as exc:
        logger.warning("Wilcoxon test skipped: %s", exc)
    for backend in cfg.dpr_backends:
        orders = sorted(cfg.window_orders)
        for lower, higher in zip(orders, orders[1:]):
            hi_name, lo_name = dpr_method_name(backend, higher), dpr_method_name(backend, lower)
            a, b = study.jsd_of(hi_name), study.jsd_of(lo_name)
            a, b = a[np.isfinite(a)], b[np.isfinite(b)]
            if a.size and b.size:
                study.tests[f"mann_whitney:{hi_name}<{lo_name}"] = mann_whitney_less(a, b)
    return study
