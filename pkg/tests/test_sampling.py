import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from christoffel_lsq import (
    Geometric,
    ProblemModel,
    build_design,
    christoffel_density,
    concentration_bound,
    draw_samples,
    empirical_failure_rate,
    spectral_deviation,
)
from christoffel_lsq import basis
from christoffel_lsq.exceptions import DegeneratePoint, DensityMismatch
from christoffel_lsq.sampling import (
    DesignMatrix,
    SampleSet,
    binomial_ci,
    christoffel_factor,
    design_deviations,
    symmetric_norm,
    weighted_features,
)

from conftest import grid_points


def power_iteration_norm(A, iters=5000):
    # independent oracle: largest |eigenvalue| of a symmetric matrix
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = A @ v
        lam = np.linalg.norm(w)
        v = w / lam
    return lam


class TestInverseCdf:
    @given(v=st.floats(0.0, 1.0), mode=st.integers(0, 9))
    @settings(max_examples=200, deadline=None)
    def test_inverts_cdf(self, v, mode):
        x = basis.invert_squared_mode(np.array([v]), mode)[0]
        assert 0.0 <= x <= 1.0
        assert basis.squared_mode_cdf(x, mode) == pytest.approx(v, abs=1e-11)

    def test_monotone(self):
        v = np.linspace(0, 1, 1001)
        for mode in range(1, 7):
            assert np.all(np.diff(basis.invert_squared_mode(v, mode)) >= 0)


class TestDensity:
    @pytest.mark.parametrize("d", [1, 2])
    @pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
    def test_integrates_to_one(self, d, m):
        model = ProblemModel(Geometric(q=0.5), d)
        X = grid_points(32, d)
        assert np.mean(christoffel_density(model, m, X)) == pytest.approx(1.0, abs=1e-12)

    def test_ks_against_mixture_cdf(self, geo):
        m = 3
        X = draw_samples(geo, m, 20000, 11).points[:, 0]
        modes = geo.multi_indices(m)[:, 0]

        def cdf(x):
            return np.mean([basis.squared_mode_cdf(x, int(k)) for k in modes], axis=0)

        assert stats.kstest(X, cdf).pvalue > 1e-3

    def test_importance_identity(self, geo):
        X = draw_samples(geo, 2, 10**5, 5).points
        w = 1.0 / christoffel_factor(geo, 2, X)
        assert abs(w.mean() - 1.0) <= 3 * w.std() / math.sqrt(w.size)

    def test_deterministic(self, geo2):
        a = draw_samples(geo2, 4, 100, 99)
        b = draw_samples(geo2, 4, 100, 99)
        np.testing.assert_array_equal(a.points, b.points)
        assert a.seed == 99 and a.m == 4

    def test_points_in_cube(self, geo2):
        P = draw_samples(geo2, 6, 5000, 1).points
        assert P.shape == (5000, 2) and P.min() >= 0 and P.max() <= 1


class TestDesign:
    def test_identity_and_diag(self):
        assert symmetric_norm(np.zeros((3, 3))) == 0
        D = DesignMatrix(L=np.zeros((1, 2)), H=np.diag([1.4, 0.8]), deviation=0.0, h=np.ones(1))
        assert spectral_deviation(D) == pytest.approx(0.4)

    def test_power_iteration_oracle(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 5))
        A = A + A.T
        assert symmetric_norm(A) == pytest.approx(power_iteration_norm(A), rel=1e-10)

    def test_build_design(self, geo):
        X = draw_samples(geo, 3, 2000, 4)
        D = build_design(geo, X, 3)
        assert D.L.shape == (2000, 3)
        np.testing.assert_allclose(D.H, D.L.T @ D.L / 2000)
        assert D.deviation < 0.1

    def test_mismatch(self, geo):
        X = draw_samples(geo, 3, 50, 4)
        with pytest.raises(DensityMismatch):
            build_design(geo, X, 4)

    def test_degenerate_point(self):
        # sqrt2 sin(2 pi x) vanishes at x = 0; with m=1 the factor is 1, so use a raw row
        with pytest.raises(DegeneratePoint):
            weighted_features(np.array([[0.0, 0.0], [1.0, 1.0]]))

    def test_conditioning_rate(self, geo):
        dev = design_deviations(geo, 2000, 3, 1000, seed=8)
        assert np.mean(dev < 0.5) >= 0.99

    def test_batching_invariant(self, geo):
        a = design_deviations(geo, 300, 2, 17, seed=1, batch=4)
        b = design_deviations(geo, 300, 2, 17, seed=1, batch=100)
        np.testing.assert_array_equal(a, b)


class TestConcentration:
    def test_values(self):
        assert concentration_bound(480, 1) == pytest.approx(
            math.exp(math.sqrt(2) * math.log(960) - 10), rel=1e-14)
        assert concentration_bound(480, 1) == pytest.approx(0.749, abs=5e-4)
        raw = concentration_bound(4800, 1)
        assert raw == pytest.approx(9600 ** math.sqrt(2) * math.exp(-100), rel=1e-12)
        assert raw == pytest.approx(1.5934e-38, rel=1e-4)
        assert concentration_bound(4800, 1, clip=True) == raw

    def test_vacuous_clip(self):
        assert concentration_bound(100, 20) > 1
        assert concentration_bound(100, 20, clip=True) == 1.0

    def test_empirical_small_cell(self, geo):
        res = empirical_failure_rate(geo, 480, 1, 2000, seed=2)
        assert res.ci_low <= res.bound
        res = empirical_failure_rate(geo, 4800, 2, 1000, seed=2)
        assert res.failures == 0 and res.rate == 0.0

    def test_binomial_ci(self):
        lo, hi = binomial_ci(0, 100)
        assert lo == 0.0 and hi == pytest.approx(1 - 0.025 ** (1 / 100), rel=1e-9)


def test_sample_set_fields():
    s = SampleSet(points=np.zeros((3, 1)), m=1)
    assert s.n == 3 and s.resampled == 0
