import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import jensenshannon

from dprdensity.baseline import Grid, GriddedDensity, normalize_on_grid
from dprdensity.metrics import (
    GridMismatchError,
    MetricRow,
    auc,
    compare,
    jsd,
    jsd_vectors,
    mse,
    pearson_corr,
)

G = Grid(-1.0, 1.0, 16)
positive = arrays(float, 16, elements=st.floats(0.0, 10.0)).filter(lambda v: v.sum() > 1e-3)


def dens(v, grid=G):
    return GriddedDensity(grid, np.asarray(v, dtype=float))


class TestJSD:
    def test_identity(self):
        p = dens(np.linspace(1, 2, 16))
        assert jsd(p, p) == 0.0

    def test_disjoint(self):
        a = np.zeros(16)
        b = np.zeros(16)
        a[:8] = 1.0
        b[8:] = 1.0
        assert jsd(dens(a), dens(b)) == pytest.approx(math.log(2), abs=1e-15)

    def test_two_point_example(self):
        # mpmath at 30 digits: 0.101749225079196743815820121555
        assert jsd_vectors([0.5, 0.5], [0.9, 0.1]) == pytest.approx(0.10174922507919674, abs=1e-15)

    def test_matches_scipy(self):
        # scipy returns the distance, i.e. the square root of the divergence
        p, q = [0.5, 0.5], [0.9, 0.1]
        assert jsd_vectors(p, q) == pytest.approx(jensenshannon(p, q) ** 2, abs=1e-14)

    @given(positive, positive)
    @settings(max_examples=100)
    def test_symmetric_and_bounded(self, a, b):
        d = jsd(dens(a), dens(b))
        assert d == pytest.approx(jsd(dens(b), dens(a)), abs=1e-12)
        assert -1e-15 <= d <= math.log(2) + 1e-12

    @given(positive, st.floats(0.01, 100.0))
    @settings(max_examples=50)
    def test_scale_free(self, a, c):
        assert jsd(dens(a), dens(c * a)) == pytest.approx(0.0, abs=1e-12)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            jsd(dens(np.ones(16)), dens(np.ones(16), Grid(-1.0, 1.5, 16)))

    def test_empty_mass(self):
        with pytest.raises(ValueError):
            jsd_vectors([0.0, 0.0], [1.0, 0.0])


class TestMSE:
    def test_zero(self):
        p = dens(np.arange(16.0))
        assert mse(p, p) == 0.0

    def test_constant_offset(self):
        v = np.arange(16.0)
        assert mse(dens(v + 0.25), dens(v)) == pytest.approx(0.0625, abs=1e-15)

    @given(positive, positive)
    @settings(max_examples=50)
    def test_nonnegative(self, a, b):
        m = mse(dens(a), dens(b))
        assert m >= 0
        assert (m == 0) == np.array_equal(a, b)


class TestCorrelation:
    def test_self(self):
        p = dens(np.sin(np.linspace(0, 3, 16)) + 1)
        assert pearson_corr(p, p) == pytest.approx(1.0, abs=1e-15)

    @given(positive, st.floats(0.01, 50.0), st.floats(0.0, 10.0))
    @settings(max_examples=60)
    def test_affine(self, a, scale, shift):
        if np.ptp(a) < 1e-3:
            return
        assert pearson_corr(dens(a), dens(scale * a + shift)) == pytest.approx(1.0, abs=1e-12)

    def test_negated(self):
        v = np.linspace(0, 1, 16)
        assert pearson_corr(dens(v), dens(2.0 - v)) == pytest.approx(-1.0, abs=1e-15)

    def test_matches_numpy(self, rng):
        a, b = rng.uniform(0, 1, 16), rng.uniform(0, 1, 16)
        assert pearson_corr(dens(a), dens(b)) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-14)

    def test_constant_warns(self):
        with pytest.warns(RuntimeWarning):
            assert math.isnan(pearson_corr(dens(np.ones(16)), dens(np.arange(16.0))))


class TestAUC:
    def test_rectangle(self):
        g = Grid(-10.0, 10.0, 2001)
        assert auc(dens(np.full(2001, 0.05), g)) == pytest.approx(1.0, abs=1e-12)

    def test_normalized(self):
        g = Grid(-5.0, 5.0, 1001)
        d = normalize_on_grid(np.exp(-g.points ** 2), g)
        assert auc(d) == pytest.approx(1.0, abs=1e-6)

    def test_matches_trapezoid(self, rng):
        v = rng.uniform(0, 1, 16)
        assert auc(dens(v)) == pytest.approx(np.trapezoid(v, G.points), abs=1e-14)

    @given(positive, st.floats(0.0, 100.0))
    @settings(max_examples=50)
    def test_linear(self, a, c):
        assert auc(dens(c * a)) == pytest.approx(c * auc(dens(a)), rel=1e-12, abs=1e-300)


def test_compare_keys():
    p = dens(np.linspace(1, 2, 16))
    assert set(compare(p, p)) == {"auc", "jsd", "mse", "pearson_r"}


def test_metric_row_columns():
    assert MetricRow.columns()[:2] == ["method", "dataset"]
    row = MetricRow("a", "b", auc=1.0)
    assert row.finite["auc"] and not row.finite["jsd"]
