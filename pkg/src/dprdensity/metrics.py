"""Agreement metrics between gridded densities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .baseline import GriddedDensity

JSD_LOG_BASE = "e"


class GridMismatchError(ValueError):
    pass


@dataclass
class MetricRow:
    method: str
    dataset: str
    auc: float = math.nan
    jsd: float = math.nan
    mse: float = math.nan
    pearson_r: float = math.nan
    train_ms: float = math.nan
    infer_ms: float = math.nan
    status: str = "ok"

    @property
    def finite(self) -> dict:
        return {f.name: math.isfinite(getattr(self, f.name))
                for f in fields(self) if f.type in ("float", float)}

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _check_same_grid(p: GriddedDensity, q: GriddedDensity):
    if p.grid != q.grid:
        raise GridMismatchError(f"grids differ: {p.grid} vs {q.grid}")


def _probabilities(values: np.ndarray) -> np.ndarray:
    total = float(np.sum(values))
    if not total > 0:
        raise ValueError("density has no mass")
    return values / total


def jsd_vectors(p, q) -> float:
    """Jensen-Shannon divergence of two probability vectors (natural log)."""
    p = _probabilities(np.asarray(p, dtype=float))
    q = _probabilities(np.asarray(q, dtype=float))
    m = 0.5 * (p + q)

    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log(a[nz] / m[nz])))

    return max(0.0, 0.5 * kl(p) + 0.5 * kl(q))


def jsd(p: GriddedDensity, q: GriddedDensity) -> float:
    _check_same_grid(p, q)
    # the uniform step cancels in the renormalization of values * dx
    return jsd_vectors(p.values, q.values)


def mse(p: GriddedDensity, q: GriddedDensity) -> float:
    _check_same_grid(p, q)
    d = p.values - q.values
    return float(np.mean(d * d))


def pearson_corr(p: GriddedDensity, q: GriddedDensity) -> float:
    """Product-moment correlation of the two value vectors; NaN if either is constant."""
    _check_same_grid(p, q)
    a = p.values - p.values.mean()
    b = q.values - q.values.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        warnings.warn("correlation undefined for a constant vector", RuntimeWarning, stacklevel=2)
        return math.nan
    return float(np.clip((a @ b) / denom, -1.0, 1.0))


def auc(p: GriddedDensity) -> float:
    """Trapezoidal integral over the uniform grid."""
    v = p.values
    return float(p.grid.step * (v.sum() - 0.5 * (v[0] + v[-1])))


def compare(estimate: GriddedDensity, reference: GriddedDensity) -> dict:
    return {
        "auc": auc(estimate),
        "jsd": jsd(estimate, reference),
        "mse": mse(estimate, reference),
        "pearson_r": pearson_corr(estimate, reference),
    }
