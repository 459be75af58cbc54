import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from _oracles import expanding_refit_oracle, ols_normal_equations
from splitenc.dgp import RngStream
from splitenc.errors import InsufficientData, RankDeficient
from splitenc.regression import (
    DirectDesign,
    RecursiveFitState,
    TimeSeriesMatrix,
    bic_select_lag,
    expanding_window_coefficients,
    expanding_window_forecast_errors,
    solve_ols,
)


class TestSolveOls:
    def test_constant_column_returns_mean(self):
        fit = solve_ols(np.ones((5, 1)), np.array([1.0, 2, 3, 4, 5]))
        assert_allclose(fit.coefficients, [3.0], rtol=1e-14)
        assert_allclose(fit.ssr, 10.0, rtol=1e-12)

    def test_exact_line(self):
        X = np.array([[1.0, 0], [1, 1], [1, 2]])
        fit = solve_ols(X, np.array([0.0, 1, 2]))
        assert_allclose(fit.coefficients, [0.0, 1.0], atol=1e-12)
        assert fit.ssr < 1e-24
        assert_allclose(fit.residuals, np.zeros(3), atol=1e-12)

    def test_matches_normal_equations_oracle(self, rng):
        X = np.column_stack([np.ones(50), rng.standard_normal((50, 2))])
        y = rng.standard_normal(50)
        fit = solve_ols(X, y)
        assert_allclose(fit.coefficients, ols_normal_equations(X, y), rtol=1e-8)
        assert_allclose(fit.ssr, float(fit.residuals @ fit.residuals), rtol=1e-12)

    def test_duplicate_column_rank_deficient(self, rng):
        x = rng.standard_normal(20)
        X = np.column_stack([np.ones(20), x, x])
        with pytest.raises(RankDeficient):
            solve_ols(X, rng.standard_normal(20))

    def test_near_collinear_triggers_condition_guard(self, rng):
        x = rng.standard_normal(40)
        X = np.column_stack([np.ones(40), x, x + 1e-9 * rng.standard_normal(40)])
        with pytest.raises(RankDeficient):
            solve_ols(X, rng.standard_normal(40))

    def test_more_columns_than_rows(self, rng):
        with pytest.raises(InsufficientData):
            solve_ols(rng.standard_normal((2, 3)), rng.standard_normal(2))


class TestDirectDesign:
    def test_from_series_alignment(self, rng):
        y = rng.standard_normal(30)
        x = rng.standard_normal((30, 2))
        d = DirectDesign.from_series(y, x, h=3)
        assert d.first_origin == 4
        assert d.n_rows == 27
        # row i: target y at date 4 + i, regressors observed at date 1 + i
        assert_array_equal(d.targets, y[3:])
        assert_array_equal(d.regressors[:, 1:], x[:27])
        assert_array_equal(d.regressors[:, 0], np.ones(27))

    def test_intercept_enforced(self, rng):
        with pytest.raises(ValueError, match="intercept"):
            DirectDesign(regressors=rng.standard_normal((10, 2)),
                         targets=rng.standard_normal(10), h=1, first_origin=2)

    def test_timeseries_matrix_validation(self):
        with pytest.raises(ValueError):
            TimeSeriesMatrix(np.array([[1.0], [np.nan]]))
        m = TimeSeriesMatrix(np.arange(6.0).reshape(3, 2))
        assert m.T == 3 and m.k == 2

    def test_from_series_accepts_timeseries_matrix(self, rng):
        y = rng.standard_normal(20)
        x = rng.standard_normal((20, 2))
        d1 = DirectDesign.from_series(TimeSeriesMatrix(y), TimeSeriesMatrix(x), h=2)
        d2 = DirectDesign.from_series(y, x, h=2)
        assert_array_equal(d1.regressors, d2.regressors)
        assert_array_equal(d1.targets, d2.targets)


class TestExpandingWindow:
    def test_constant_only_gives_running_mean(self, rng):
        y = rng.standard_normal(40)
        d = DirectDesign.from_series(y, None, h=1)
        coefs = expanding_window_coefficients(d, k0=5)
        # fit at origin t averages the targets observed up to t
        expected = [np.mean(y[1:t]) for t in range(5, 40)]
        assert_allclose(coefs[:, 0], expected, rtol=1e-12)

    def test_endpoint_equals_full_batch(self, rng):
        y = rng.standard_normal(60)
        x = rng.standard_normal((60, 2))
        d = DirectDesign.from_series(y, x, h=2)
        coefs = expanding_window_coefficients(d, k0=12)
        # the final origin T-h fits on every pair whose target is <= T-h,
        # which excludes the last h design rows (their targets come later)
        batch = np.linalg.lstsq(d.regressors[:-2], d.targets[:-2], rcond=None)[0]
        assert_allclose(coefs[-1], batch, rtol=1e-8, atol=1e-10)

    def test_matches_per_origin_refits_on_ar1(self):
        g = RngStream(7, 0).generator()
        e = g.standard_normal(500)
        y = np.empty(500)
        y[0] = e[0]
        for t in range(1, 500):
            y[t] = 0.3 * y[t - 1] + e[t]
        d = DirectDesign.from_series(y, y, h=1)
        coefs = expanding_window_coefficients(d, k0=125)
        oracle = expanding_refit_oracle(d.regressors, d.targets,
                                        k0_row=125 - d.first_origin,
                                        n_fits=coefs.shape[0])
        assert_allclose(coefs, oracle, rtol=1e-8, atol=1e-10)

    @pytest.mark.parametrize("seed", range(15))
    def test_random_designs_match_batch_refits(self, seed):
        g = np.random.default_rng(seed)
        T = int(g.integers(25, 70))
        k = int(g.integers(0, 4))
        h = int(g.integers(1, 4))
        y = g.standard_normal(T)
        x = g.standard_normal((T, k)) if k else None
        d = DirectDesign.from_series(y, x, h=h)
        k0 = k + 1 + h + int(g.integers(0, 5))
        if k0 > d.last_target - h:
            pytest.skip("degenerate draw")
        coefs = expanding_window_coefficients(d, k0)
        oracle = expanding_refit_oracle(d.regressors, d.targets,
                                        k0_row=k0 - d.first_origin,
                                        n_fits=coefs.shape[0])
        assert_allclose(coefs, oracle, rtol=1e-8, atol=1e-10)

    def test_endpoint_invariant_to_row_permutation(self, rng):
        y = rng.standard_normal(50)
        x = rng.standard_normal((50, 1))
        d = DirectDesign.from_series(y, x, h=1)
        perm = rng.permutation(30)  # shuffle only rows seen before the endpoint
        Z = d.regressors.copy()
        t = d.targets.copy()
        Z[:30], t[:30] = Z[perm], t[perm]
        shuffled = DirectDesign(regressors=Z, targets=t, h=1, first_origin=2)
        a = expanding_window_coefficients(d, k0=10)
        b = expanding_window_coefficients(shuffled, k0=10)
        assert_allclose(a[-1], b[-1], rtol=1e-8)
        assert not np.allclose(a[0], b[0])  # the path itself is order-sensitive

    def test_forecast_errors_definition(self, rng):
        y = rng.standard_normal(40)
        x = rng.standard_normal(40)
        d = DirectDesign.from_series(y, x, h=1)
        k0 = 8
        errs = expanding_window_forecast_errors(d, k0)
        assert errs.shape == (40 - 1 - k0 + 1,)
        coefs = expanding_window_coefficients(d, k0)
        # first error: target at date k0+1 minus forecast from the fit at k0
        pred = coefs[0] @ np.array([1.0, x[k0 - 1]])
        assert_allclose(errs[0], y[k0] - pred, rtol=1e-12)

    def test_k0_too_small(self, rng):
        d = DirectDesign.from_series(rng.standard_normal(30), rng.standard_normal(30), h=1)
        with pytest.raises(InsufficientData):
            expanding_window_coefficients(d, k0=2)

    def test_rank_deficient_window_reports_origin(self, rng):
        y = rng.standard_normal(30)
        x = np.ones(30)  # collinear with the intercept
        d = DirectDesign.from_series(y, x, h=1)
        with pytest.raises(RankDeficient, match="t="):
            expanding_window_coefficients(d, k0=5)


class TestRecursiveFitState:
    def test_matches_batch_after_each_absorb(self, rng):
        X = np.column_stack([np.ones(25), rng.standard_normal((25, 2))])
        y = rng.standard_normal(25)
        state = RecursiveFitState.empty(3)
        for i in range(25):
            state.absorb(X[i], y[i])
            if i >= 4:
                batch = np.linalg.lstsq(X[: i + 1], y[: i + 1], rcond=None)[0]
                assert_allclose(state.coefficients(), batch, rtol=1e-8, atol=1e-10)
        assert state.count == 25

    def test_underdetermined_state(self):
        state = RecursiveFitState.empty(2)
        state.absorb([1.0, 0.5], 1.0)
        with pytest.raises(InsufficientData):
            state.coefficients()


class TestBicSelectLag:
    def test_white_noise_prefers_zero(self):
        hits = 0
        for r in range(200):
            y = RngStream(31, r).generator().standard_normal(200)
            hits += bic_select_lag(y, h=1, p_max=8) == 0
        assert hits / 200 > 0.7

    def test_ar1_modal_lag_is_zero(self):
        # direct regression of y_t on y_{t-1}: one lag term suffices
        picks = []
        for r in range(500):
            g = RngStream(32, r).generator()
            e = g.standard_normal(1000)
            y = np.empty(1000)
            y[0] = e[0]
            for t in range(1, 1000):
                y[t] = 0.3 * y[t - 1] + e[t]
            picks.append(bic_select_lag(y, h=1, p_max=8))
        values, counts = np.unique(picks, return_counts=True)
        assert values[np.argmax(counts)] == 0
        assert counts.max() / 500 > 0.8

    def test_constant_plus_tiny_noise(self):
        g = RngStream(33, 0).generator()
        y = 5.0 + 1e-8 * g.standard_normal(100)
        assert bic_select_lag(y, h=1, p_max=4) == 0

    def test_needs_real_dynamics_to_pick_lags(self):
        # seasonal-style dependence at lag j=2 of the direct regression
        g = RngStream(34, 0).generator()
        e = g.standard_normal(2000)
        y = np.empty(2000)
        y[:3] = e[:3]
        for t in range(3, 2000):
            y[t] = 0.6 * y[t - 3] + e[t]
        assert bic_select_lag(y, h=1, p_max=4) == 2

    def test_common_sample_makes_ssr_nested(self, rng):
        # on the shared target range, adding lags cannot raise the SSR
        y = rng.standard_normal(150)
        p_max, h = 5, 2
        t0 = h + p_max
        n_eff = len(y) - t0
        ssrs = []
        for p in range(p_max + 1):
            X = np.column_stack([np.ones(n_eff)]
                                + [y[t0 - h - j: len(y) - h - j] for j in range(p + 1)])
            coef = np.linalg.lstsq(X, y[t0:], rcond=None)[0]
            resid = y[t0:] - X @ coef
            ssrs.append(float(resid @ resid))
        assert all(b <= a + 1e-9 for a, b in zip(ssrs, ssrs[1:]))

    def test_lag_source_series(self, rng):
        # selecting lags of a different predictor series than the target
        x = rng.standard_normal(300)
        y = np.roll(x, 2) * 0.8 + 0.1 * rng.standard_normal(300)
        y[:2] = 0.0
        assert bic_select_lag(y, h=1, p_max=4, lag_source=x) == 1

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            bic_select_lag(np.zeros(15), h=1, p_max=8)
