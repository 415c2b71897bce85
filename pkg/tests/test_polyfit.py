import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dprdensity.polyfit import (
    IllConditionedError,
    PolyCoeffs,
    cholesky,
    lstsq_cholesky,
    poly_eval,
    standardize,
    vandermonde,
)


def householder_lstsq(A, b):
    """Least squares by explicit Householder reflections (test oracle)."""
    R = np.array(A, dtype=float)
    y = np.array(b, dtype=float)
    m, n = R.shape
    for k in range(n):
        v = R[k:, k].copy()
        alpha = -np.copysign(np.linalg.norm(v), v[0])
        v[0] -= alpha
        vv = v @ v
        if vv == 0:
            continue
        R[k:, k:] -= np.outer(v, 2.0 * (v @ R[k:, k:]) / vv)
        y[k:] -= v * (2.0 * (v @ y[k:]) / vv)
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - R[i, i + 1:n] @ x[i + 1:]) / R[i, i]
    return x


class TestPolyEval:
    def test_constant(self):
        np.testing.assert_array_equal(poly_eval(PolyCoeffs([5.0]), np.array([-3.0, 0.0, 8.0])), 5.0)

    def test_identity(self):
        np.testing.assert_array_equal(poly_eval(PolyCoeffs([0.0, 1.0]), np.array([-2.0, 0.0, 3.0])),
                                      [-2.0, 0.0, 3.0])

    def test_square(self):
        assert poly_eval(PolyCoeffs([1.0, 2.0, 1.0]), np.array([3.0]))[0] == 16.0

    def test_scaled_domain(self):
        c = PolyCoeffs([1.0, 2.0, 1.0], shift=1.0, scale=2.0)
        # t = (x - 1)/2 -> (1 + t)^2 at x=5 is 9
        assert c(np.array([5.0]))[0] == pytest.approx(9.0)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.floats(-3, 3), st.floats(0.1, 4))
    @settings(max_examples=80)
    def test_monomial_backmap(self, coeffs, shift, scale):
        c = PolyCoeffs(coeffs, shift, scale)
        x = np.linspace(-2, 2, 7)
        raw = np.polynomial.polynomial.polyval(x, c.monomial())
        np.testing.assert_allclose(raw, c(x), rtol=1e-9, atol=1e-8 * (1 + np.abs(raw).max()))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            PolyCoeffs([1.0, np.nan])


class TestFit:
    def test_exact_line(self):
        xs = np.arange(10.0)
        c = lstsq_cholesky(xs, 2 + 3 * xs, 1)
        np.testing.assert_allclose(c.monomial(), [2.0, 3.0], atol=1e-10)

    def test_quartic_reproduction(self):
        xs = np.linspace(-1, 1, 50)
        c = lstsq_cholesky(xs, xs ** 4, 4)
        assert np.max(np.abs(c(xs) - xs ** 4)) < 1e-8

    def test_against_qr_oracle(self, rng):
        xs = np.sort(rng.uniform(-2, 3, 200))
        ys = 0.5 - xs + 0.3 * xs ** 2 - 0.1 * xs ** 3 + rng.normal(0, 0.05, xs.size)
        c = lstsq_cholesky(xs, ys, 3)
        shift, scale = standardize(xs)
        oracle = householder_lstsq(vandermonde((xs - shift) / scale, 3), ys)
        np.testing.assert_allclose(c.coeffs, oracle, atol=1e-6)

    @pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
    def test_fitted_values_match_oracle(self, order, rng):
        n = 10 * (order + 1)
        xs = np.sort(rng.uniform(0, 100, n))
        ys = np.sin(xs / 20) + rng.normal(0, 0.01, n)
        c = lstsq_cholesky(xs, ys, order)
        shift, scale = standardize(xs)
        V = vandermonde((xs - shift) / scale, order)
        np.testing.assert_allclose(c(xs), V @ householder_lstsq(V, ys), atol=1e-6)

    def test_affine_invariance(self, rng):
        xs = np.linspace(-1, 1, 60)
        ys = np.exp(xs) + rng.normal(0, 0.01, xs.size)
        a = lstsq_cholesky(xs, ys, 4)(xs)
        b = lstsq_cholesky(1000.0 + 250.0 * xs, ys, 4)(1000.0 + 250.0 * xs)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_duplicate_x_is_ill_conditioned(self):
        xs = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        with pytest.raises(IllConditionedError) as info:
            lstsq_cholesky(xs, np.arange(6.0), 3)
        assert info.value.order == 3

    def test_too_few_points(self):
        with pytest.raises(IllConditionedError):
            lstsq_cholesky(np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 0.0]), 4)

    def test_ridge_shrinks(self, rng):
        xs = np.linspace(-1, 1, 40)
        ys = xs ** 3 + rng.normal(0, 0.1, 40)
        plain = lstsq_cholesky(xs, ys, 5)
        ridged = lstsq_cholesky(xs, ys, 5, ridge=10.0)
        assert np.linalg.norm(ridged.coeffs) < np.linalg.norm(plain.coeffs)

    def test_constant_xs(self):
        with pytest.raises(ValueError):
            lstsq_cholesky(np.ones(5), np.ones(5), 1)


class TestCholesky:
    @given(st.integers(2, 7), st.integers(0, 2 ** 31))
    @settings(max_examples=50)
    def test_reconstructs_spd(self, n, seed):
        r = np.random.default_rng(seed)
        m = r.normal(size=(n + 3, n))
        a = m.T @ m + n * np.eye(n)
        L = cholesky(a)
        np.testing.assert_allclose(L @ L.T, a, rtol=1e-12, atol=1e-10)
        assert np.all(np.triu(L, 1) == 0)

    def test_singular(self):
        with pytest.raises(IllConditionedError) as info:
            cholesky(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert info.value.pivot_index == 1

    def test_linalg_subclass(self):
        assert issubclass(IllConditionedError, np.linalg.LinAlgError)
