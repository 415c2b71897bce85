"""Polynomial least squares through the normal equations and a Cholesky solve.

Inputs are mapped affinely onto [-1, 1] before the Vandermonde matrix is
formed; :class:`PolyCoeffs` keeps the coefficients in that standardized
variable together with the map, so evaluation never needs the (badly
conditioned) raw-domain monomial coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

_EPS = np.finfo(float).eps


class IllConditionedError(np.linalg.LinAlgError):
    """Cholesky factorization of the normal matrix broke down."""

    def __init__(self, order: int, pivot_index: int, pivot: float):
        self.order = order
        self.pivot_index = pivot_index
        self.pivot = pivot
        super().__init__(
            f"normal equations of order {order} are numerically singular: "
            f"pivot {pivot_index} = {pivot:.3e}"
        )


@dataclass(frozen=True)
class PolyCoeffs:
    """Ascending coefficients of ``p(t)`` with ``t = (x - shift) / scale``."""

    coeffs: np.ndarray = field()
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coefficient vector must be 1-d and non-empty")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, xs):
        return poly_eval(self, xs)

    def monomial(self) -> np.ndarray:
        """Ascending coefficients in the raw variable ``x``."""
        a = 1.0 / self.scale
        b = -self.shift / self.scale
        out = np.zeros_like(self.coeffs)
        # c_k (a x + b)^k expanded binomially
        for k, ck in enumerate(self.coeffs):
            for i in range(k + 1):
                out[i] += ck * comb(k, i) * a ** i * b ** (k - i)
        return out


def poly_eval(c: PolyCoeffs, xs) -> np.ndarray:
    """Horner evaluation, O(len(xs) * order)."""
    t = (np.asarray(xs, dtype=float) - c.shift) / c.scale
    out = np.full(t.shape, c.coeffs[-1])
    for ck in c.coeffs[-2::-1]:
        out = out * t + ck
    return out


def vandermonde(t: np.ndarray, order: int) -> np.ndarray:
    return np.vander(np.asarray(t, dtype=float), order + 1, increasing=True)


def cholesky(a: np.ndarray, order: int | None = None) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a``; no pivoting.

    A pivot that is not safely positive relative to the matrix scale raises
    :class:`IllConditionedError`.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    order = n - 1 if order is None else order
    tol = 10.0 * n * _EPS * float(np.max(np.abs(np.diag(a))))
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if not d > tol:
            raise IllConditionedError(order, j, float(d))
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _solve_lower(L, b):
    y = np.zeros_like(b)
    for i in range(b.size):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def _solve_upper(U, y):
    n = y.size
    x = np.zeros_like(y)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - U[i, i + 1:] @ x[i + 1:]) / U[i, i]
    return x


def standardize(xs: np.ndarray) -> tuple[float, float]:
    """Shift and scale mapping ``[min(xs), max(xs)]`` onto ``[-1, 1]``."""
    lo = float(np.min(xs))
    hi = float(np.max(xs))
    if not hi > lo:
        raise ValueError("xs must not be all identical")
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def lstsq_cholesky(xs, ys, order: int, ridge: float = 0.0) -> PolyCoeffs:
    """Least-squares polynomial fit of degree ``order``.

    Solves ``(X^T X + ridge I) c = X^T y`` by Cholesky factorization of the
    normal matrix, with ``X`` the Vandermonde matrix of the standardized
    abscissae.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size != ys.size:
        raise ValueError("xs and ys must have the same length")
    if order < 0:
        raise ValueError("order must be nonnegative")
    if xs.size < order + 1:
        raise IllConditionedError(order, xs.size, 0.0)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    shift, scale = standardize(xs)
    X = vandermonde((xs - shift) / scale, order)
    A = X.T @ X
    if ridge:
        A = A + ridge * np.eye(order + 1)
    b = X.T @ ys
    L = cholesky(A, order)
    c = _solve_upper(L.T, _solve_lower(L, b))
    if not np.all(np.isfinite(c)):
        raise IllConditionedError(order, order, float("nan"))
    return PolyCoeffs(c, shift, scale)
