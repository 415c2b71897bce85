"""Dual polynomial regression (DPR) density estimation.

A non-parametric estimate (KDE or smoothed histogram) of the training data
is split at its mode.  Each half is fitted by its own least-squares
polynomial, the result is clipped to ``[epsilon, y_max]`` and normalized.
Training touches the samples; evaluation only touches the two polynomials.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .baseline import Grid, GriddedDensity
from .estimators import HDEConfig, KDEConfig, kde_evaluate, kde_fit, smoothed_histogram
from .polyfit import IllConditionedError, PolyCoeffs, lstsq_cholesky, poly_eval

MODEL_FORMAT = "dpr-model/1"
DEFAULT_KDE_POINTS = 1000
REFINEMENT = 10


class DPRFitError(ValueError):
    """Training data or configuration cannot support a DPR fit."""


class SaturatedFitError(DPRFitError):
    """The least-squares solve was ill-conditioned; the fit is unusable."""


@dataclass(frozen=True)
class DPRConfig:
    """Training options.

    ``eval_points`` is the size of the training grid.  For the KDE backend
    ``None`` means 1000 points; for the histogram backend it is the bin
    count and ``None`` means the Freedman-Diaconis rule.
    """

    eval_points: int | None = None
    order: int = 4
    k_sigma: float = 5.0
    t_factor: float = 0.01
    backend: str = "kde"
    min_filter_size: int = 3
    smoothing_h: float = 2.5
    epsilon: float = 1e-12
    return_prob: bool = True
    ridge: float = 0.0

    def __post_init__(self):
        if self.backend not in ("kde", "hde"):
            raise ValueError(f"backend must be 'kde' or 'hde', got {self.backend!r}")
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if not 0 < self.t_factor < 1:
            raise ValueError("t_factor must lie in (0, 1)")
        if not self.k_sigma > 0:
            raise ValueError("k_sigma must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.eval_points is not None and self.eval_points < 3:
            raise ValueError("eval_points must be at least 3")


@dataclass(frozen=True)
class DPRModel:
    left: PolyCoeffs
    right: PolyCoeffs
    x_break: float
    x_left_bound: float
    x_right_bound: float
    y_max: float
    norm_const: float
    epsilon: float
    x_min: float
    x_max: float
    support_points: int
    discontinuity: float = 0.0
    left_bound_flag: str = "gradient"
    right_bound_flag: str = "gradient"
    config: DPRConfig = field(default_factory=DPRConfig)

    def __post_init__(self):
        if not self.x_left_bound < self.x_break < self.x_right_bound:
            raise ValueError("bounds must satisfy left < break < right")
        if not self.y_max > self.epsilon:
            raise ValueError("y_max must exceed epsilon")
        if not self.norm_const > 0:
            raise ValueError("norm_const must be positive")

    def unnormalized(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, self.epsilon)
        left = (xs >= self.x_left_bound) & (xs < self.x_break)
        right = (xs >= self.x_break) & (xs <= self.x_right_bound)
        out[left] = poly_eval(self.left, xs[left])
        out[right] = poly_eval(self.right, xs[right])
        return np.clip(out, self.epsilon, self.y_max)

    def pdf(self, xs) -> np.ndarray:
        return self.unnormalized(xs) / self.norm_const

    def support_grid(self) -> Grid:
        """Refined grid over the fitted interval used for the normalization integral."""
        return Grid(self.x_left_bound, self.x_right_bound, self.support_points)

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        def poly(c: PolyCoeffs):
            return {"coeffs": [float(v) for v in c.coeffs], "shift": c.shift, "scale": c.scale}

        return {
            "format": MODEL_FORMAT,
            "left": poly(self.left),
            "right": poly(self.right),
            "x_break": self.x_break,
            "x_left_bound": self.x_left_bound,
            "x_right_bound": self.x_right_bound,
            "y_max": self.y_max,
            "norm_const": self.norm_const,
            "epsilon": self.epsilon,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "support_points": self.support_points,
            "discontinuity": self.discontinuity,
            "left_bound_flag": self.left_bound_flag,
            "right_bound_flag": self.right_bound_flag,
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DPRModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {d.get('format')!r}")
        d = dict(d)
        d.pop("format")
        d["left"] = PolyCoeffs(**d["left"])
        d["right"] = PolyCoeffs(**d["right"])
        d["config"] = DPRConfig(**d["config"])
        return cls(**d)


def save_model(model: DPRModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path) -> DPRModel:
    with open(path) as fh:
        return DPRModel.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def training_density(x: np.ndarray, lo: float, hi: float, cfg: DPRConfig):
    """Backend estimate on the training grid; returns ``(grid_x, density)``."""
    if cfg.backend == "kde":
        n = cfg.eval_points or DEFAULT_KDE_POINTS
        grid_x = np.linspace(lo, hi, n)
        return grid_x, kde_evaluate(kde_fit(x, KDEConfig()), grid_x)
    hist = smoothed_histogram(
        x, HDEConfig(n_bins=cfg.eval_points, min_kernel_size=cfg.min_filter_size,
                     smoothing_h=cfg.smoothing_h))
    return hist.centers, hist.density


def _bounds(grid_x, dens, i_break, x_min, x_max, t_factor):
    g = np.gradient(dens, grid_x)
    mag = np.abs(g)
    tau = t_factor * float(mag.max())
    x_break = grid_x[i_break]
    left_hi = 0.5 * (x_min + x_break)
    right_lo = 0.5 * (x_break + x_max)

    above = np.flatnonzero(mag >= tau) if tau > 0 else np.array([], dtype=int)
    if above.size:
        left, left_flag = float(grid_x[above[0]]), "gradient"
        right, right_flag = float(grid_x[above[-1]]), "gradient"
    else:
        left, left_flag = x_min, "no-threshold"
        right, right_flag = x_max, "no-threshold"
    if left > left_hi:
        left, left_flag = left_hi, "clamped"
    left = max(left, x_min)
    if right < right_lo:
        right, right_flag = right_lo, "clamped"
    right = min(right, x_max)
    return left, right, left_flag, right_flag


def dpr_train(samples, cfg: DPRConfig = DPRConfig()) -> DPRModel:
    x = np.asarray(getattr(samples, "values", samples), dtype=float).ravel()
    if x.size < 10:
        raise DPRFitError(f"DPR needs at least 10 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DPRFitError("samples must be finite")
    mu = float(np.mean(x))
    sigma = float(np.std(x))
    if not sigma > 0:
        raise DPRFitError("samples have zero variance")
    x_min = max(mu - cfg.k_sigma * sigma, float(np.min(x)))
    x_max = min(mu + cfg.k_sigma * sigma, float(np.max(x)))
    subset = x[(x >= x_min) & (x <= x_max)]

    grid_x, dens = training_density(subset, x_min, x_max, cfg)
    x_min, x_max = float(grid_x[0]), float(grid_x[-1])
    i_break = int(np.argmax(dens))
    x_break = float(grid_x[i_break])
    x_left, x_right, lflag, rflag = _bounds(grid_x, dens, i_break, x_min, x_max, cfg.t_factor)

    left_mask = (grid_x >= x_left) & (grid_x < x_break)
    right_mask = (grid_x >= x_break) & (grid_x <= x_right)
    need = cfg.order + 1
    for name, mask in (("left", left_mask), ("right", right_mask)):
        if mask.sum() < need:
            raise DPRFitError(
                f"{name} half has {int(mask.sum())} training points but order {cfg.order} "
                f"needs {need}; increase the number of training points"
            )
    try:
        left = lstsq_cholesky(grid_x[left_mask], dens[left_mask], cfg.order, cfg.ridge)
        right = lstsq_cholesky(grid_x[right_mask], dens[right_mask], cfg.order, cfg.ridge)
    except IllConditionedError as exc:
        raise SaturatedFitError(str(exc)) from exc

    y_max = float(poly_eval(right, np.array([x_break]))[0])
    if not (math.isfinite(y_max) and y_max > cfg.epsilon):
        raise SaturatedFitError(f"fitted peak value {y_max!r} is not above epsilon")
    jump = float(abs(poly_eval(left, np.array([x_break]))[0] - y_max))

    support_points = REFINEMENT * grid_x.size
    draft = DPRModel(left, right, x_break, x_left, x_right, y_max, 1.0, cfg.epsilon,
                     x_min, x_max, support_points, jump, lflag, rflag, cfg)
    sx = draft.support_grid().points
    area = float(np.trapezoid(draft.unnormalized(sx), sx))
    if not (math.isfinite(area) and area > 0):
        raise SaturatedFitError(f"normalization integral is {area!r}")
    return DPRModel(left, right, x_break, x_left, x_right, y_max, area, cfg.epsilon,
                    x_min, x_max, support_points, jump, lflag, rflag, cfg)


def dpr_eval(model: DPRModel, grid: Grid) -> GriddedDensity:
    return GriddedDensity(grid, model.pdf(grid.points))


def dpr_pdf_handle(model: DPRModel):
    """Callable density over arbitrary query arrays."""
    return model.pdf
