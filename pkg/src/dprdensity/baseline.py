"""Baseline density families and gridded, discretely normalized densities.

Six unimodal families are provided: the skew-normal (which covers the
symmetric and the two skewed Gaussian cases), the two asymmetric M-Wright
densities and the asymmetric Laplace distribution.  All functions accept
scalars or arrays and are pure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import mpmath
import numpy as np
from scipy.special import erf, gammaln

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Series evaluation policy for the Wright-type series.
SERIES_RTOL = 1e-15
SERIES_MAX_TERMS = 200
SERIES_DIVERGENCE_TOL = 1e-8
CANCELLATION_LIMIT = 1e8
# Points whose cancellation would need more digits than this are clamped.
MAX_EXTENDED_DIGITS = 120


class SeriesConvergenceError(ArithmeticError):
    """Raised when a Wright-type series does not converge within the term cap."""

    def __init__(self, x: float, nu: float, last_term: float):
        self.x = x
        self.nu = nu
        self.last_term = last_term
        super().__init__(
            f"series did not converge in {SERIES_MAX_TERMS} terms "
            f"(x={x!r}, nu={nu!r}, |last term|={last_term:.3e})"
        )


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SkewNormalParams:
    mu: float = 0.0
    sigma: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (math.isfinite(self.mu) and math.isfinite(self.alpha)):
            raise ValueError("mu and alpha must be finite")


@dataclass(frozen=True)
class MWrightParams:
    """Asymmetric M-Wright parameters.

    ``skew`` is the lambda of type I (``>= 1``) or the alpha of type II
    (``0 < alpha <= 2``).
    """

    nu: float
    skew: float
    variant: str = "AMW1"

    def __post_init__(self):
        if not 0.0 < self.nu < 0.5:
            raise ValueError(f"nu must lie in (0, 0.5), got {self.nu}")
        if self.variant == "AMW1":
            if not self.skew >= 1.0:
                raise ValueError(f"AMW1 requires lambda >= 1, got {self.skew}")
        elif self.variant == "AMW2":
            if not 0.0 < self.skew <= 2.0:
                raise ValueError(f"AMW2 requires 0 < alpha <= 2, got {self.skew}")
        else:
            raise ValueError(f"unknown M-Wright variant {self.variant!r}")


@dataclass(frozen=True)
class ALDParams:
    m: float = 0.0
    lam: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @property
    def p(self) -> float:
        """Probability mass left of the location ``m``."""
        k2 = self.kappa * self.kappa
        return k2 / (1.0 + k2)


Params = Union[SkewNormalParams, MWrightParams, ALDParams]

FAMILIES = (
    "gaussian_symmetric",
    "gaussian_right_skewed",
    "gaussian_left_skewed",
    "amw1",
    "amw2",
    "ald",
)

_FAMILY_PARAM_TYPE = {
    "gaussian_symmetric": SkewNormalParams,
    "gaussian_right_skewed": SkewNormalParams,
    "gaussian_left_skewed": SkewNormalParams,
    "amw1": MWrightParams,
    "amw2": MWrightParams,
    "ald": ALDParams,
}


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: Params
    domain: tuple = (-10.0, 10.0)
    seed: int | None = None

    def __post_init__(self):
        if self.family not in _FAMILY_PARAM_TYPE:
            raise ValueError(f"unknown family {self.family!r}")
        if not isinstance(self.params, _FAMILY_PARAM_TYPE[self.family]):
            raise TypeError(
                f"family {self.family!r} needs {_FAMILY_PARAM_TYPE[self.family].__name__}"
            )
        if self.family == "amw1" and self.params.variant != "AMW1":
            raise ValueError("amw1 family needs variant AMW1")
        if self.family == "amw2" and self.params.variant != "AMW2":
            raise ValueError("amw2 family needs variant AMW2")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        if self.family.startswith("gaussian"):
            return skew_normal_pdf(x, self.params)
        if self.family == "amw1":
            return amw1_pdf(x, self.params)
        if self.family == "amw2":
            return amw2_pdf(x, self.params)
        return ald_pdf(x, self.params)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.hi > self.lo:
            raise ValueError(f"grid needs finite hi > lo, got [{self.lo}, {self.hi}]")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n_points}")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)


@dataclass(frozen=True)
class GriddedDensity:
    grid: Grid
    values: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} density values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    def riemann_mass(self) -> float:
        return float(np.sum(self.values) * self.grid.step)


def normalize_on_grid(values: np.ndarray, grid: Grid) -> GriddedDensity:
    """Rescale raw density values so that ``sum(f_i) * dx == 1``."""
    values = np.asarray(values, dtype=float)
    total = float(np.sum(values)) * grid.step
    if not total > 0:
        raise ValueError("density is identically zero on the grid")
    return GriddedDensity(grid, values / total, normalized=True)


# ---------------------------------------------------------------------------
# skew normal
# ---------------------------------------------------------------------------


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("x must be finite")
    return arr


def normal_cdf(z: ArrayLike) -> ArrayLike:
    return 0.5 * (1.0 + erf(np.asarray(z, dtype=float) / math.sqrt(2.0)))


def skew_normal_pdf(x: ArrayLike, p: SkewNormalParams) -> ArrayLike:
    arr = _check_finite(x)
    z = (arr - p.mu) / p.sigma
    phi = np.exp(-0.5 * z * z) / SQRT_2PI
    out = 2.0 / p.sigma * phi * normal_cdf(p.alpha * z)
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# M-Wright series
# ---------------------------------------------------------------------------


def _reflection_args(nu: float, offset: int) -> np.ndarray:
    """Gamma arguments ``a_j`` of the reflected series.

    ``offset=1`` gives the M-Wright coefficients ``1/Gamma(1 - nu(j+1))``,
    ``offset=0`` the complementary-CDF coefficients ``1/Gamma(1 - nu j)``.
    """
    j = np.arange(SERIES_MAX_TERMS, dtype=float)
    return nu * (j + offset)


def _float_coefficients(nu: float, offset: int):
    """Return (log|c_j|, sign c_j, log envelope part) for ``j < cap``.

    ``c_j = Gamma(a_j) sin(pi a_j) / (pi j!)``; the envelope omits |sin| so
    that terms which vanish identically never end the series early.
    """
    a = _reflection_args(nu, offset)
    j = np.arange(SERIES_MAX_TERMS, dtype=float)
    log_env = np.empty_like(a)
    sin = np.empty_like(a)
    if offset == 0:
        # j = 0 is the constant 1/Gamma(1) = 1
        log_env[0] = 0.0
        sin[0] = 1.0
        log_env[1:] = gammaln(a[1:]) - gammaln(j[1:] + 1.0) - math.log(math.pi)
        sin[1:] = np.sin(math.pi * a[1:])
        integral = np.abs(a[1:] - np.round(a[1:])) < 1e-12
        sin[1:][integral] = 0.0
    else:
        log_env[:] = gammaln(a) - gammaln(j + 1.0) - math.log(math.pi)
        sin[:] = np.sin(math.pi * a)
        sin[np.abs(a - np.round(a)) < 1e-12] = 0.0
    return log_env, sin


@lru_cache(maxsize=64)
def _mp_coefficients(nu: float, offset: int, dps: int):
    with mpmath.workdps(dps):
        nu_mp = mpmath.mpf(nu)
        coeffs = []
        for j in range(SERIES_MAX_TERMS):
            a = nu_mp * (j + offset)
            if offset == 0 and j == 0:
                coeffs.append(mpmath.mpf(1))
            else:
                coeffs.append(mpmath.rgamma(1 - a) / mpmath.factorial(j))
        return tuple(coeffs)


def _series_mp(x: float, nu: float, offset: int, n_terms: int, dps: int) -> float:
    coeffs = _mp_coefficients(nu, offset, dps)[:n_terms]
    with mpmath.workdps(dps):
        val = mpmath.polyval(coeffs[::-1], -mpmath.mpf(x))
    return float(val)


def _wright_series(x: np.ndarray, nu: float, offset: int):
    """Evaluate ``sum_j c_j (-x)^j`` for ``x >= 0``.

    Returns ``(values, clamped)`` where ``clamped`` marks points whose
    cancellation was too severe to resolve and were set to zero.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros_like(flat)
    clamped = np.zeros(flat.shape, dtype=bool)

    log_env, sin = _float_coefficients(nu, offset)
    j = np.arange(SERIES_MAX_TERMS, dtype=float)
    alternating = np.where(j % 2 == 0, 1.0, -1.0)

    zero = flat == 0.0
    out[zero] = 1.0 if offset == 0 else float(np.exp(log_env[0]) * sin[0])
    pos = np.flatnonzero(~zero)
    for start in range(0, pos.size, 512):
        idx = pos[start:start + 512]
        xs = flat[idx]
        with np.errstate(over="ignore"):
            env = np.exp(log_env[None, :] + j[None, :] * np.log(xs)[:, None])
        terms = env * sin[None, :] * alternating[None, :]
        partial = np.cumsum(terms, axis=1)
        stop = env < SERIES_RTOL * (np.abs(partial) + 1.0)
        converged = stop.any(axis=1)
        first = np.where(converged, stop.argmax(axis=1), SERIES_MAX_TERMS - 1)
        rows = np.arange(idx.size)
        value = partial[rows, first]
        # largest term actually summed, for cancellation bookkeeping
        mask = j[None, :] <= first[:, None]
        biggest = np.max(np.where(mask, env, 0.0), axis=1)
        ratio = biggest / np.maximum(np.abs(value), 1e-300)

        for r in range(idx.size):
            finite = np.isfinite(biggest[r]) and np.isfinite(value[r])
            lossy = (not finite) or ratio[r] > CANCELLATION_LIMIT
            if not converged[r]:
                # both series are bounded by 1, so a huge term means the
                # partial sums are pure cancellation noise
                if not finite or biggest[r] > CANCELLATION_LIMIT:
                    clamped[idx[r]] = True
                    out[idx[r]] = 0.0
                    continue
                last = float(np.abs(terms[r, -1]))
                if last > SERIES_DIVERGENCE_TOL:
                    raise SeriesConvergenceError(float(xs[r]), nu, last)
            if lossy:
                digits = int(math.ceil(math.log10(max(ratio[r], 10.0)))) if finite else 999
                dps = 25 + digits
                if dps > MAX_EXTENDED_DIGITS:
                    clamped[idx[r]] = True
                    out[idx[r]] = 0.0
                    continue
                # bucket precision so the coefficient cache stays small
                dps = int(10 * math.ceil(dps / 10))
                out[idx[r]] = _series_mp(float(xs[r]), nu, offset, int(first[r]) + 1, dps)
            else:
                out[idx[r]] = value[r]
    return out.reshape(x.shape), clamped.reshape(x.shape)


def mwright(x: ArrayLike, nu: float) -> ArrayLike:
    """M-Wright (Mainardi) function on ``x >= 0`` via the reflected series.

    The coefficients ``Gamma(nu j + nu) sin(pi (nu j + nu)) / (pi j!)`` equal
    ``1 / (j! Gamma(1 - nu - nu j))`` without evaluating Gamma at negative
    arguments.  Results are clamped below at zero.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    arr = _check_finite(x)
    if np.any(arr < 0):
        raise ValueError("mwright is defined here for x >= 0")
    values, clamped = _wright_series(arr, nu, offset=1)
    if np.any(clamped):
        logger.debug("mwright: %d point(s) clamped to 0 (nu=%g)", int(np.sum(clamped)), nu)
    values = np.maximum(values, 0.0)
    return float(values) if np.ndim(x) == 0 else values


def mwright_cdf_factor(y: ArrayLike, nu: float) -> ArrayLike:
    """CDF of the symmetric M-Wright density ``M(|y|)/2``.

    The inner series is the tail mass ``int_{|y|}^inf M``; it is clamped into
    [0, 1] and to 0 where cancellation makes it unresolvable.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    arr = _check_finite(y)
    tail, clamped = _wright_series(np.abs(arr), nu, offset=0)
    if np.any(clamped):
        logger.debug("mwright_cdf_factor: %d tail value(s) clamped (nu=%g)", int(np.sum(clamped)), nu)
    tail = np.clip(tail, 0.0, 1.0)
    out = 0.5 * (1.0 + np.sign(arr) * (1.0 - tail))
    return float(out) if np.ndim(y) == 0 else out


def amw1_pdf(x: ArrayLike, p: MWrightParams) -> ArrayLike:
    if p.variant != "AMW1":
        raise ValueError("amw1_pdf needs an AMW1 parameter record")
    arr = _check_finite(x)
    out = np.asarray(mwright(np.abs(arr), p.nu)) * np.asarray(
        mwright_cdf_factor(p.skew * arr, p.nu)
    )
    return float(out) if np.ndim(x) == 0 else out


def amw2_pdf(x: ArrayLike, p: MWrightParams) -> ArrayLike:
    if p.variant != "AMW2":
        raise ValueError("amw2_pdf needs an AMW2 parameter record")
    arr = _check_finite(x)
    a = p.skew
    arg = np.where(arr >= 0, a * arr, -arr / a)
    out = a / (1.0 + a * a) * np.asarray(mwright(arg, p.nu))
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# asymmetric Laplace
# ---------------------------------------------------------------------------


def ald_pdf(x: ArrayLike, p: ALDParams) -> ArrayLike:
    arr = _check_finite(x)
    k = p.kappa
    scale = p.lam / (k + 1.0 / k)
    d = arr - p.m
    right = np.exp(-p.lam * k * np.maximum(d, 0.0))
    left = np.exp((p.lam / k) * np.minimum(d, 0.0))
    out = scale * np.where(d >= 0, right, left)
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------


def make_baseline(spec: DistributionSpec, grid: Grid) -> GriddedDensity:
    """Evaluate the family density on ``grid`` and renormalize it discretely."""
    raw = np.asarray(spec.pdf(grid.points), dtype=float)
    if not np.all(np.isfinite(raw)) or np.any(raw < 0):
        raise ValueError(f"{spec.family}: density produced invalid values")
    return normalize_on_grid(raw, grid)
