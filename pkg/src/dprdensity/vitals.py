"""Synthetic blood-pressure stand-in data.

Real patient records cannot be shipped; these generators produce files with
the same single-reading-per-row schema.  Systolic values follow a skew-normal
law with a long right tail, diastolic a milder skew-normal, both in mmHg.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

SYSTOLIC = {"loc": 108.0, "scale": 22.0, "alpha": 4.0}
DIASTOLIC = {"loc": 70.0, "scale": 13.0, "alpha": 1.5}


def skew_normal_draws(rng: np.random.Generator, n: int, loc: float, scale: float,
                      alpha: float) -> np.ndarray:
    delta = alpha / math.sqrt(1.0 + alpha * alpha)
    u0 = np.abs(rng.standard_normal(n))
    u1 = rng.standard_normal(n)
    return loc + scale * (delta * u0 + math.sqrt(1.0 - delta * delta) * u1)


def systolic_like(n: int, seed: int | None) -> np.ndarray:
    return skew_normal_draws(np.random.default_rng(seed), n, **SYSTOLIC)


def vitals_table(n: int, seed: int | None) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {
        "systolic": skew_normal_draws(rng, n, **SYSTOLIC),
        "diastolic": skew_normal_draws(rng, n, **DIASTOLIC),
    }


def write_vitals_csv(path, n: int = 300_000, seed: int | None = 0) -> Path:
    path = Path(path)
    table = vitals_table(n, seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["systolic", "diastolic"])
        for s, d in zip(table["systolic"], table["diastolic"]):
            w.writerow([f"{s:.1f}", f"{d:.1f}"])
    return path
