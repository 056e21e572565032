import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from hawkes_ldp.rates import (
    AffineCapRate,
    LinearRate,
    LogPowerRate,
    eval_rate,
    lipschitz_check,
    rate_from_dict,
    rate_from_json,
    rate_to_dict,
    rate_to_json,
    sublinearity_report,
)

ALL_RATES = [
    LinearRate(1.0, 0.5),
    LogPowerRate(2.0, 2.0),
    AffineCapRate(1.0, 1.0, 10.0),
]


class TestEval:
    def test_log_power_at_zero(self):
        assert LogPowerRate(2.0, 2.0).eval(0.0) == pytest.approx(np.log(2.0) ** 2, abs=1e-15)

    def test_negative_excitation_clamped(self):
        for rate in ALL_RATES:
            assert rate.eval(-3.0) == rate.eval(0.0)

    def test_linear(self):
        assert LinearRate(1.0, 0.5).eval(4.0) == pytest.approx(3.0, abs=0.0)

    def test_cap_saturates(self):
        rate = AffineCapRate(1.0, 1.0, 10.0)
        assert rate.eval(100.0) == 10.0
        assert rate.eval(2.0) == 3.0

    def test_nondecreasing_on_grid(self):
        z = np.linspace(-1.0, 200.0, 4001)
        for rate in ALL_RATES:
            vals = rate.eval(z)
            assert np.all(np.diff(vals) >= 0.0), type(rate).__name__

    def test_lower_bound_positive_and_attained(self):
        for rate in ALL_RATES:
            assert rate.lower_bound > 0.0
            assert rate.eval(0.0) == pytest.approx(rate.lower_bound, abs=1e-15)

    def test_eval_rate_helper(self):
        assert eval_rate(LinearRate(2.0, 1.0), 1.0) == 3.0


class TestConstructors:
    def test_linear_validation(self):
        with pytest.raises(ValueError):
            LinearRate(0.0, 1.0)
        with pytest.raises(ValueError):
            LinearRate(1.0, -0.5)

    def test_log_power_validation(self):
        with pytest.raises(ValueError):
            LogPowerRate(1.0, 1.0)  # needs c > 1 so the floor is positive
        with pytest.raises(ValueError):
            LogPowerRate(2.0, 0.0)

    def test_affine_cap_validation(self):
        with pytest.raises(ValueError):
            AffineCapRate(1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            AffineCapRate(-1.0, 1.0, 10.0)


class TestSublinearityReport:
    def test_log_power_tail_vanishes(self):
        report = sublinearity_report(LogPowerRate(np.e, 1.0), z_max=1e6)
        assert report.ratio_nonincreasing
        assert report.estimate < 2e-5

    def test_linear_plateau(self):
        report = sublinearity_report(LinearRate(1.0, 0.5), z_max=1e6)
        assert report.estimate == pytest.approx(0.5, abs=1e-4)
        assert not report.estimate < 0.4  # genuinely not sublinear

    def test_cap_tail_vanishes(self):
        report = sublinearity_report(AffineCapRate(1.0, 1.0, 10.0), z_max=1e8)
        assert report.estimate == pytest.approx(10.0 / 1e8, rel=1e-6)

    def test_rejects_bad_zmax(self):
        with pytest.raises(ValueError):
            sublinearity_report(LinearRate(1.0, 1.0), z_max=0.0)


class TestLipschitzCheck:
    def test_linear_slope_exact(self):
        assert lipschitz_check(LinearRate(1.0, 1.0), 1.0) == pytest.approx(1.0, abs=1e-10)

    def test_log_power_first_power(self):
        # sup d/dz log(2 + z) = 1/2 at z = 0
        bound = lipschitz_check(LogPowerRate(2.0, 1.0), 1.0)
        assert bound <= 0.5 + 1e-12
        assert bound == pytest.approx(0.5, abs=1e-3)

    def test_log_power_squared_matches_numeric_maximization(self):
        # oracle: maximize d/dz [log(2+z)]^2 = 2 log(2+z)/(2+z) numerically
        res = minimize_scalar(
            lambda z: -2.0 * np.log(2.0 + z) / (2.0 + z), bounds=(0.0, 10.0), method="bounded"
        )
        oracle = -res.fun
        assert oracle == pytest.approx(2.0 / np.e, abs=1e-9)  # attained at z = e - 2
        assert lipschitz_check(LogPowerRate(2.0, 1.0), 2.0) == pytest.approx(oracle, abs=1e-4)

    def test_validation(self):
        with pytest.raises(ValueError):
            lipschitz_check(LinearRate(1.0, 1.0), 0.0)
        with pytest.raises(ValueError):
            lipschitz_check(LinearRate(1.0, 1.0), 1.0, grid=np.array([1.0, 0.5]))


class TestSerialization:
    def test_round_trip_all_families(self):
        for rate in ALL_RATES:
            assert rate_from_json(rate_to_json(rate)) == rate

    def test_log_power_record_shape(self):
        assert rate_to_dict(LogPowerRate(2.0, 1.0)) == {
            "family": "log_power", "c": 2.0, "beta": 1.0,
        }

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            rate_from_dict({"family": "cubic", "nu": 1.0})

    def test_unknown_and_missing_keys_rejected(self):
        with pytest.raises(ValueError):
            rate_from_dict({"family": "linear", "nu": 1.0, "beta": 1.0, "gamma": 2.0})
        with pytest.raises(ValueError):
            rate_from_dict({"family": "linear", "nu": 1.0})
        with pytest.raises(ValueError):
            rate_from_dict({"nu": 1.0, "beta": 1.0})
