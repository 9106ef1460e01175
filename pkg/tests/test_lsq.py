import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from christoffel_lsq import (
    Finite,
    Geometric,
    ProblemModel,
    a_delta,
    approx_error_sq,
    avg_error_all,
    avg_error_std_empirical,
    draw_samples,
    fit,
    schedule_m,
    schedule_m_fixed,
)
from christoffel_lsq.exceptions import DensityMismatch, RankDeficient
from christoffel_lsq.lsq import FIXED_DELTA, LsqFit, solve_weighted
from christoffel_lsq.model import RandomFunction
from christoffel_lsq.sampling import SampleSet

SQ2 = math.sqrt(2.0)


def scan_floor(n, denom):
    # oracle: largest m with m * denom <= n, by scanning
    m = 0
    while (m + 1) * denom <= n:
        m += 1
    return m


class TestSchedules:
    def test_examples(self):
        assert schedule_m(1000, 0.5).m == 1
        r = schedule_m(100, FIXED_DELTA)
        assert r.m == 0 and not r.feasible
        assert schedule_m(10**5, 0.5).m == 116
        assert schedule_m_fixed(600).m == 1
        assert schedule_m_fixed(500).m == 0

    def test_million(self):
        # floor(1e6 / (48 sqrt2 ln 4e6)) = floor(1e6 / 1031.93...) = 969
        denom = 48 * SQ2 * math.log(4e6)
        assert denom == pytest.approx(1031.93, abs=0.01)
        assert schedule_m_fixed(10**6).m == scan_floor(10**6, denom) == 969

    @given(n=st.integers(1, 10**6), delta=st.floats(1e-6, 0.99))
    @settings(max_examples=200, deadline=None)
    def test_floor_matches_scan(self, n, delta):
        denom = 48 * (SQ2 * math.log(2 * n) - math.log(delta))
        m = schedule_m(n, delta).m
        assert m * denom <= n * (1 + 1e-12)
        assert (m + 1) * denom > n * (1 - 1e-12)

    def test_fixed_delta_consistent(self):
        for n in (600, 1200, 2400, 10**5):
            assert schedule_m_fixed(n).m == schedule_m(n, FIXED_DELTA).m

    def test_amplification(self):
        assert a_delta(0.1) == pytest.approx(1.07300, abs=1e-5)
        assert a_delta(0.5) == pytest.approx(math.sqrt(1 + 1 / (12 * math.log(2))) * SQ2, rel=1e-14)
        assert a_delta(0.5) == pytest.approx(1.4968130, abs=1e-7)
        vals = [a_delta(d) for d in (1e-3, 1e-6, 1e-9)]
        assert vals == sorted(vals, reverse=True) and vals[-1] > 1 and vals[-1] < 1.01


class TestFit:
    def _design(self, model, m, n=400, seed=0):
        return draw_samples(model, m, n, seed)

    def test_constant(self, geo):
        X = self._design(geo, 4)
        res = fit(geo, X, 4, np.ones(X.n))
        np.testing.assert_allclose(res.coefficients, [1, 0, 0, 0], atol=1e-9)
        assert res.admissible and res.rank == 4

    def test_zero(self, geo):
        X = self._design(geo, 3)
        assert np.all(fit(geo, X, 3, np.zeros(X.n)).coefficients == 0)

    def test_known_combination(self, geo2):
        m = 7
        X = self._design(geo2, m, 2000, 3)
        c = np.zeros(m)
        c[1], c[4] = 3.0, -2.0
        y = geo2.basis_matrix(X.points, m) @ c
        np.testing.assert_allclose(fit(geo2, X, m, y).coefficients, c, atol=1e-8)

    @given(seed=st.integers(0, 2**32), m=st.integers(1, 10))
    @settings(max_examples=30, deadline=None)
    def test_reproduction_property(self, seed, m):
        model = ProblemModel(Geometric(q=0.5), 2)
        X = draw_samples(model, m, 60 * m, seed)
        c = np.random.default_rng(seed).standard_normal((m, 3))
        y = model.basis_matrix(X.points, m) @ c
        got = fit(model, X, m, y).coefficients
        assert np.linalg.norm(got - c) <= 1e-8 * np.linalg.norm(c)

    def test_rank_deficient(self, geo):
        X = SampleSet(points=np.full((10, 1), 0.25), m=3)
        with pytest.raises(RankDeficient):
            fit(geo, X, 3, np.ones(10))

    def test_solve_weighted_reports_rank(self):
        L = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        c, rank = solve_weighted(L, np.ones(3))
        assert c is None and rank == 1

    def test_mismatch(self, geo):
        with pytest.raises(DensityMismatch):
            fit(geo, self._design(geo, 2), 3, np.zeros(400))


class TestErrors:
    def test_in_space_is_zero(self):
        f = RandomFunction(np.array([1.0, 2.0, 3.0]))
        assert approx_error_sq(None, LsqFit(np.array([1.0, 2.0, 3.0]), 0.0, True, 3), f) == 0.0

    def test_zero_fit(self):
        c = np.array([0.5, -1.0, 2.0, 0.25])
        assert approx_error_sq(None, LsqFit(np.zeros(2), 0.0, True, 2), RandomFunction(c)) == \
            pytest.approx(np.sum(c ** 2))

    def test_orthogonal_decomposition(self, geo):
        rng = np.random.default_rng(0)
        c = rng.standard_normal(12)
        ct = rng.standard_normal(5)
        total = approx_error_sq(geo, LsqFit(ct, 0.0, True, 5), RandomFunction(c))
        best = np.sum(c[5:] ** 2)
        inspace = np.sum((c[:5] - ct) ** 2)
        assert total == pytest.approx(best + inspace, abs=1e-12)

    def test_avg_error_all(self, geo, halving):
        assert avg_error_all(geo, 0) == pytest.approx(math.sqrt(geo.trace()))
        assert avg_error_all(halving, 4) == pytest.approx(0.25)
        assert avg_error_all(geo, 3) == pytest.approx(math.sqrt(0.5 ** 8 / 0.75), rel=1e-12)
        assert avg_error_all(geo, 3) == pytest.approx(0.072169, abs=1e-6)


class TestEmpirical:
    def test_deterministic(self, geo):
        a = avg_error_std_empirical(geo, 600, 1, FIXED_DELTA, 5, 10, seed=1)
        b = avg_error_std_empirical(geo, 600, 1, FIXED_DELTA, 5, 10, seed=1)
        assert a.mean == b.mean and a.se == b.se

    def test_threads_match_serial(self, geo):
        a = avg_error_std_empirical(geo, 600, 1, FIXED_DELTA, 6, 10, seed=4)
        b = avg_error_std_empirical(geo, 600, 1, FIXED_DELTA, 6, 10, seed=4, jobs=3)
        assert a.mean == b.mean and a.se == b.se

    def test_zero_tail_gives_zero_error(self):
        model = ProblemModel(Finite((1.0, 0.5)), 1)
        est = avg_error_std_empirical(model, 300, 2, 0.5, 4, 10, seed=0)
        assert est.mean == 0.0 and est.truncation_tail == 0.0

    def test_m1_mean_close_to_tail(self, geo):
        # with m = 1 the estimator is the weighted mean; the in-space error
        # is O(1/n) so the mean sits just above tail_sum(1)
        est = avg_error_std_empirical(geo, 2000, 1, 0.5, 200, 200, seed=3)
        tail = geo.tail_sum(1)
        assert tail - 4 * est.se <= est.mean <= tail * (1 + 8 / 2000) + 4 * est.se

    def test_sixteen_fold_bound(self, geo):
        est = avg_error_std_empirical(geo, 600, 1, FIXED_DELTA, 200, 200, seed=9)
        assert est.pairs == 40000
        assert est.mean - 4 * est.se <= 16 * 0.5 ** 4 / 0.75
        assert est.bound_holds()
