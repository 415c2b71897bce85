"""Classical density estimators: Normal, Pearson Type I, smoothed histogram, Gaussian KDE."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import betaln

from .baseline import SQRT_2PI, Grid, GriddedDensity, normalize_on_grid

# Upper bound on kernel-matrix elements materialized per KDE block.
KDE_BLOCK_ELEMENTS = 2 ** 22


class EstimationWarning(UserWarning):
    pass


def _as_samples(samples, minimum: int) -> np.ndarray:
    x = np.asarray(getattr(samples, "values", samples), dtype=float).ravel()
    if x.size < minimum:
        raise ValueError(f"need at least {minimum} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def population_std(x: np.ndarray) -> float:
    return float(np.std(x))


# ---------------------------------------------------------------------------
# Normal
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalFit:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def pdf(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * SQRT_2PI)


def fit_normal(samples) -> NormalFit:
    x = _as_samples(samples, 2)
    sigma = population_std(x)
    if not sigma > 0:
        raise ValueError("samples have zero variance")
    return NormalFit(float(np.mean(x)), sigma)


def normal_pdf(fit: NormalFit, grid: Grid) -> GriddedDensity:
    return GriddedDensity(grid, fit.pdf(grid.points))


# ---------------------------------------------------------------------------
# Pearson Type I
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PearsonMoments:
    mu3: float
    mu4: float
    beta1: float
    beta2: float
    kappa_disc: float

    @property
    def is_type_one(self) -> bool:
        return self.kappa_disc < 0


def moments_discriminant(variance: float, mu3: float, mu4: float) -> PearsonMoments:
    if not variance > 0:
        raise ValueError("zero variance")
    beta1 = mu3 * mu3 / variance ** 3
    beta2 = mu4 / variance ** 2
    return PearsonMoments(mu3, mu4, beta1, beta2, beta2 - 1.5 * beta1 - 3.0)


def pearson_discriminant(samples) -> PearsonMoments:
    x = _as_samples(samples, 4)
    d = x - np.mean(x)
    d2 = d * d
    var = float(np.mean(d2))
    if not var > 0:
        raise ValueError("samples have zero variance")
    return moments_discriminant(var, float(np.mean(d2 * d)), float(np.mean(d2 * d2)))


@dataclass(frozen=True)
class BetaFit:
    delta1: float
    delta2: float
    alpha_loc: float
    beta_scale: float
    converged: bool = True
    type_one: bool = True

    def pdf(self, x) -> np.ndarray:
        t = (np.asarray(x, dtype=float) - self.alpha_loc) / self.beta_scale
        out = np.zeros_like(t)
        inside = (t > 0) & (t < 1)
        ti = t[inside]
        log_f = ((self.delta1 - 1) * np.log(ti) + (self.delta2 - 1) * np.log1p(-ti)
                 - betaln(self.delta1, self.delta2) - math.log(self.beta_scale))
        out[inside] = np.exp(log_f)
        return out


def beta_moment_shapes(t: np.ndarray) -> tuple[float, float]:
    """Method-of-moments beta shapes for data already mapped into (0, 1)."""
    m = float(np.mean(t))
    v = float(np.var(t))
    common = m * (1.0 - m) / v - 1.0
    if not common > 0:
        raise ValueError("moments are incompatible with a beta distribution")
    return m * common, (1.0 - m) * common


def _beta_nll(theta, x, xmin, xmax, span):
    log_d1, log_d2, a, b = theta
    d1, d2 = math.exp(log_d1), math.exp(log_d2)
    lo = xmin - span * math.exp(a)
    hi = xmax + span * math.exp(b)
    scale = hi - lo
    t = (x - lo) / scale
    ll = ((d1 - 1.0) * np.log(t) + (d2 - 1.0) * np.log1p(-t)).mean()
    val = -(ll - betaln(d1, d2) - math.log(scale))
    return val if math.isfinite(val) else np.inf


def fit_pearson1(samples, max_iter: int = 4000) -> BetaFit:
    """Four-parameter beta fit by maximum likelihood.

    The support starts at ``[min - 1% range, max + 1% range]`` with shapes from
    moment matching; Nelder-Mead then refines log-shapes and the two log
    support offsets, which keeps every sample strictly inside the support.
    """
    x = _as_samples(samples, 4)
    moments = pearson_discriminant(x)
    if not moments.is_type_one:
        warnings.warn(
            f"Pearson discriminant {moments.kappa_disc:.3g} >= 0; Type I fit may be poor",
            EstimationWarning, stacklevel=2,
        )
    xmin, xmax = float(np.min(x)), float(np.max(x))
    span = xmax - xmin
    lo0, hi0 = xmin - 0.01 * span, xmax + 0.01 * span
    d1, d2 = beta_moment_shapes((x - lo0) / (hi0 - lo0))
    initial = BetaFit(d1, d2, lo0, hi0 - lo0, converged=False, type_one=moments.is_type_one)

    theta0 = np.array([math.log(d1), math.log(d2), math.log(0.01), math.log(0.01)])
    f0 = _beta_nll(theta0, x, xmin, xmax, span)
    res = minimize(_beta_nll, theta0, args=(x, xmin, xmax, span), method="Nelder-Mead",
                   options={"maxiter": max_iter, "maxfev": 2 * max_iter,
                            "xatol": 1e-7, "fatol": 1e-11})
    if not res.success or not res.fun <= f0:
        warnings.warn(f"beta MLE did not converge ({res.message}); using moment fit",
                      EstimationWarning, stacklevel=2)
        return initial
    log_d1, log_d2, a, b = res.x
    lo = xmin - span * math.exp(a)
    hi = xmax + span * math.exp(b)
    return BetaFit(math.exp(log_d1), math.exp(log_d2), lo, hi - lo, converged=True,
                   type_one=moments.is_type_one)


def pearson1_pdf(fit: BetaFit, grid: Grid) -> GriddedDensity:
    return GriddedDensity(grid, fit.pdf(grid.points))


# ---------------------------------------------------------------------------
# smoothed histogram
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HDEConfig:
    n_bins: int | None = None
    min_kernel_size: int = 5
    smoothing_h: float = 2.5

    def __post_init__(self):
        if self.n_bins is not None and self.n_bins < 1:
            raise ValueError("n_bins must be positive")
        if self.min_kernel_size < 1 or self.min_kernel_size % 2 == 0:
            raise ValueError("min_kernel_size must be a positive odd integer")
        if not self.smoothing_h > 0:
            raise ValueError("smoothing_h must be positive")


def iqr(x: np.ndarray) -> float:
    # numpy's default 'linear' quantile method
    q1, q3 = np.percentile(x, [25, 75])
    return float(q3 - q1)


def freedman_diaconis_bins(x) -> int:
    x = np.asarray(x, dtype=float)
    width = 2.0 * iqr(x) / np.cbrt(x.size)
    span = float(np.max(x) - np.min(x))
    if not width > 0:
        bins = int(math.ceil(math.log2(x.size))) + 1
        warnings.warn(f"IQR is zero; falling back to {bins} bins", EstimationWarning, stacklevel=2)
        return bins
    # guard against 2.0000000001 rounding up to 3
    return max(1, int(math.ceil(span / width - 1e-9)))


def gaussian_kernel(min_size: int, h: float) -> np.ndarray:
    """Normalized discrete Gaussian filter of odd size ``max(min_size, floor(6h))``."""
    size = max(min_size, int(math.floor(6.0 * h)))
    if size % 2 == 0:
        size += 1
    half = size // 2
    k = np.arange(-half, half + 1, dtype=float)
    w = np.exp(-0.5 * (k / h) ** 2)
    return w / w.sum()


def smooth_reflect(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve with half-sample symmetric padding, which conserves total mass."""
    half = kernel.size // 2
    padded = np.pad(values, half, mode="symmetric")
    return np.convolve(padded, kernel, mode="valid")


@dataclass(frozen=True)
class SmoothedHistogram:
    edges: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    def on_grid(self, grid: Grid) -> GriddedDensity:
        x = grid.points
        vals = np.interp(x, self.centers, self.density)
        vals[(x < self.edges[0]) | (x > self.edges[-1])] = 0.0
        return normalize_on_grid(vals, grid)


def smoothed_histogram(samples, cfg: HDEConfig = HDEConfig()) -> SmoothedHistogram:
    x = _as_samples(samples, 2)
    lo, hi = float(np.min(x)), float(np.max(x))
    if not hi > lo:
        raise ValueError("need at least 2 distinct samples")
    bins = cfg.n_bins if cfg.n_bins is not None else freedman_diaconis_bins(x)
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    raw = counts / (x.size * width)
    smoothed = smooth_reflect(raw, gaussian_kernel(cfg.min_kernel_size, cfg.smoothing_h))
    return SmoothedHistogram(edges, raw, smoothed)


def hde_fit(samples, cfg: HDEConfig, grid: Grid) -> GriddedDensity:
    return smoothed_histogram(samples, cfg).on_grid(grid)


# ---------------------------------------------------------------------------
# KDE
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KDEConfig:
    bandwidth: float | None = None


@dataclass(frozen=True)
class KDEModel:
    samples: np.ndarray = field(repr=False)
    bandwidth: float

    def __call__(self, xs) -> np.ndarray:
        return kde_evaluate(self, xs)


def scott_bandwidth(x: np.ndarray) -> float:
    return population_std(x) * x.size ** (-0.2)


def kde_fit(samples, cfg: KDEConfig = KDEConfig()) -> KDEModel:
    x = _as_samples(samples, 1 if cfg.bandwidth is not None else 2)
    h = cfg.bandwidth if cfg.bandwidth is not None else scott_bandwidth(x)
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"bandwidth must be positive, got {h}")
    return KDEModel(x.copy(), float(h))


def kde_evaluate(model: KDEModel, xs, block_elements: int = KDE_BLOCK_ELEMENTS) -> np.ndarray:
    """Direct Gaussian-kernel sum over all samples, in bounded-memory blocks of query points."""
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    data = model.samples
    h = model.bandwidth
    out = np.empty(flat.size)
    rows = max(1, block_elements // max(1, data.size))
    norm = 1.0 / (data.size * h * SQRT_2PI)
    for start in range(0, flat.size, rows):
        z = (flat[start:start + rows, None] - data[None, :]) / h
        out[start:start + rows] = np.exp(-0.5 * z * z).sum(axis=1) * norm
    return out.reshape(xs.shape)


def kde_eval(model: KDEModel, grid: Grid) -> GriddedDensity:
    return GriddedDensity(grid, kde_evaluate(model, grid.points))
