import json

import numpy as np
import pytest
from scipy.integrate import quad

from hawkes_ldp.kernels import (
    ApproxError,
    ExpSumKernel,
    IllConditionedFit,
    SampledKernel,
    approx_error,
    default_validation_grid,
    fit_exp_sum,
    geometric_decay_grid,
    validate_positive,
)


class TestExpSumKernel:
    def test_eval_single_term(self):
        k = ExpSumKernel(((1.0, 1.0),))
        assert k.eval(0.0) == 1.0
        assert k.eval(np.log(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_eval_vectorized_matches_scalar(self):
        k = ExpSumKernel(((2.0, 1.0), (-1.0, 2.0)))
        t = np.linspace(0.0, 5.0, 17)
        vec = k.eval(t)
        assert vec.shape == t.shape
        for ti, vi in zip(t, vec):
            assert k.eval(float(ti)) == pytest.approx(vi, abs=0.0)

    def test_l1_norm_mixed_sign(self):
        # sum a_i / b_i = 2/1 - 1/2
        assert ExpSumKernel(((2.0, 1.0), (-1.0, 2.0))).l1_norm() == pytest.approx(1.5, abs=1e-15)

    def test_l1_norm_matches_quadrature(self):
        k = ExpSumKernel(((2.0, 1.0), (-1.0, 2.0), (0.3, 0.25)))
        horizon = 50.0 / k.decays.min()
        integral, err = quad(k.eval, 0.0, horizon, limit=500)
        assert k.l1_norm() == pytest.approx(integral, rel=1e-6)

    def test_tail_integral_is_integral_of_eval(self):
        k = ExpSumKernel(((2.0, 1.0), (-1.0, 2.0)))
        for t0 in (0.0, 0.7, 3.0):
            integral, _ = quad(k.eval, t0, t0 + 60.0, limit=500)
            assert k.tail_integral(t0) == pytest.approx(integral, rel=1e-8)

    def test_constructor_rejects_bad_terms(self):
        with pytest.raises(ValueError):
            ExpSumKernel(())
        with pytest.raises(ValueError):
            ExpSumKernel(((1.0, 0.0),))
        with pytest.raises(ValueError):
            ExpSumKernel(((1.0, -1.0),))
        with pytest.raises(ValueError):
            ExpSumKernel(((0.0, 1.0),))
        with pytest.raises(ValueError):
            ExpSumKernel(((np.inf, 1.0),))

    def test_json_round_trip(self):
        k = ExpSumKernel(((2.0, 1.0), (-1.0, 2.0)))
        assert ExpSumKernel.from_json(k.to_json()) == k
        assert json.loads(k.to_json()) == {"terms": [[2.0, 1.0], [-1.0, 2.0]]}

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            ExpSumKernel.from_dict({"terms": [[1.0, 1.0]], "extra": 1})


class TestValidatePositive:
    def test_mixed_sign_positive_kernel_certified(self):
        # 2e^-t - e^-2t = e^-t (2 - e^-t) > 0 for all t >= 0
        report = validate_positive(ExpSumKernel(((2.0, 1.0), (-1.0, 2.0))))
        assert report.ok
        assert report.grid_min > 0.0
        assert report.violation_t is None

    def test_violation_reported_at_first_bad_time(self):
        # h(0) = 1 - 1 = 0, so the violation is at t = 0
        report = validate_positive(ExpSumKernel(((1.0, 1.0), (-1.0, 0.5))))
        assert not report.ok
        assert report.violation_t == 0.0
        assert report.violation_value <= 0.0

    def test_interior_violation(self):
        # 1.0e^-t - 0.9e^-0.5t goes negative for large t but h(0) > 0
        report = validate_positive(ExpSumKernel(((1.0, 1.0), (-0.9, 0.5))))
        assert not report.ok
        assert report.violation_t > 0.0

    def test_default_grid_shape(self):
        k = ExpSumKernel(((1.0, 1.0),))
        grid = default_validation_grid(k)
        assert grid.size == 10_000
        assert grid[0] == 0.0
        assert np.all(np.diff(grid) > 0)


class TestSampledKernel:
    def test_invariants(self):
        with pytest.raises(ValueError):
            SampledKernel(np.array([0.1, 1.0]), np.array([1.0, 0.5]))  # t0 != 0
        with pytest.raises(ValueError):
            SampledKernel(np.array([0.0, 1.0, 1.0]), np.array([1.0, 0.5, 0.2]))
        with pytest.raises(ValueError):
            SampledKernel(np.array([0.0, 1.0]), np.array([1.0, -0.5]))
        with pytest.raises(ValueError):
            SampledKernel(np.array([0.0, 1.0]), np.array([1.0, np.nan]))
        with pytest.raises(ValueError):
            SampledKernel(np.array([0.0]), np.array([1.0]))

    def test_tail_flag(self):
        t_long = np.linspace(0.0, 50.0, 501)
        assert SampledKernel(t_long, (1.0 + t_long) ** -2).tail_negligible
        t_short = np.linspace(0.0, 3.0, 31)
        assert not SampledKernel(t_short, (1.0 + t_short) ** -2).tail_negligible

    def test_csv_round_trip(self, tmp_path):
        t = np.linspace(0.0, 10.0, 101)
        k = SampledKernel(t, np.exp(-1.3 * t))
        path = tmp_path / "kernel.csv"
        k.to_csv(path)
        back = SampledKernel.from_csv(path)
        np.testing.assert_array_equal(back.t, k.t)
        np.testing.assert_array_equal(back.values, k.values)


class TestApproxError:
    def test_exp_pair_closed_form(self):
        # integral of |e^-t - e^-2t| over [0, inf) = 1 - 1/2; max at t = ln 2 is 1/4
        t = np.linspace(0.0, 20.0, 20_001)
        sampled = SampledKernel(t, np.exp(-t))
        err = approx_error(sampled, ExpSumKernel(((1.0, 2.0),)))
        assert isinstance(err, ApproxError)
        assert err.l1 == pytest.approx(0.5, abs=1e-3)
        assert err.linf == pytest.approx(0.25, abs=1e-4)

    def test_zero_error_on_self(self):
        t = np.linspace(0.0, 30.0, 301)
        k = ExpSumKernel(((1.0, 1.0),))
        err = approx_error(SampledKernel(t, k.eval(t)), k)
        assert err.l1 == pytest.approx(0.0, abs=1e-14)
        assert err.linf == pytest.approx(0.0, abs=1e-15)


class TestFitExpSum:
    def test_single_exponential_recovered_exactly(self):
        t = np.linspace(0.0, 20.0, 2001)
        sampled = SampledKernel(t, np.exp(-t))
        k = fit_exp_sum(sampled, 1, decay_grid=np.array([0.5]))
        assert k.dim == 1
        a, b = k.terms[0]
        assert a == pytest.approx(1.0, abs=1e-12)
        assert b == pytest.approx(1.0, abs=1e-15)
        assert approx_error(sampled, k).l1 < 1e-6

    def test_power_law_l1_error_strictly_decreasing(self):
        t = np.linspace(0.0, 50.0, 2001)
        sampled = SampledKernel(t, (1.0 + t) ** -2)
        errs = [approx_error(sampled, fit_exp_sum(sampled, n)).l1 for n in (2, 4, 6)]
        assert errs[0] > errs[1] > errs[2]

    def test_nested_fixed_grid_error_nonincreasing(self):
        t = np.linspace(0.0, 50.0, 2001)
        sampled = SampledKernel(t, (1.0 + t) ** -2)
        grid = geometric_decay_grid(10, 0.01, 2.0)
        errs = [approx_error(sampled, fit_exp_sum(sampled, n, decay_grid=grid)).l1
                for n in range(1, 11)]
        for worse, better in zip(errs, errs[1:]):
            assert better <= worse + 1e-12

    def test_fit_is_nonnegative_by_construction(self):
        t = np.linspace(0.0, 50.0, 2001)
        sampled = SampledKernel(t, (1.0 + t) ** -2)
        k = fit_exp_sum(sampled, 4)
        report = validate_positive(k)
        assert report.ok, f"squared fit dipped to {report.grid_min}"
        assert k.dim <= 4 * (4 + 1) // 2

    def test_term_budget(self):
        t = np.linspace(0.0, 50.0, 2001)
        sampled = SampledKernel(t, (1.0 + t) ** -2)
        for n in (2, 3, 5):
            assert fit_exp_sum(sampled, n).dim <= n * (n + 1) // 2

    def test_order_validation(self):
        t = np.linspace(0.0, 5.0, 11)
        sampled = SampledKernel(t, np.exp(-t))
        with pytest.raises(ValueError):
            fit_exp_sum(sampled, 0)
        with pytest.raises(ValueError):
            fit_exp_sum(sampled, 12)
        with pytest.raises(ValueError):
            fit_exp_sum(sampled, 3, decay_grid=np.array([0.5, 1.0]))

    def test_duplicate_rates_raise_ill_conditioned(self):
        t = np.linspace(0.0, 20.0, 401)
        sampled = SampledKernel(t, np.exp(-t))
        with pytest.raises(IllConditionedFit) as excinfo:
            fit_exp_sum(sampled, 2, decay_grid=np.array([0.5, 0.5]))
        assert excinfo.value.condition_number > 1e12

    def test_live_tail_warns(self):
        t = np.linspace(0.0, 3.0, 31)
        sampled = SampledKernel(t, (1.0 + t) ** -2)
        with pytest.warns(UserWarning):
            fit_exp_sum(sampled, 2)


def test_geometric_decay_grid():
    grid = geometric_decay_grid(4, 0.5, 2.0)
    np.testing.assert_allclose(grid, [0.5, 1.0, 2.0, 4.0])
    with pytest.raises(ValueError):
        geometric_decay_grid(0, 0.5, 2.0)
    with pytest.raises(ValueError):
        geometric_decay_grid(3, -1.0, 2.0)
