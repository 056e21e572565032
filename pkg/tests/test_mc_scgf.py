"""Monte Carlo cumulant-scaling estimator: oracles, refusal policy, curves."""

import math

import numpy as np
import pytest

from hawkes_ldp.kernels import ExpSumKernel
from hawkes_ldp.ldp import ScgfCurve
from hawkes_ldp.linear_ldp import LinearModel, gamma_linear, theta_critical
from hawkes_ldp.mc_scgf import (
    MIN_EFFECTIVE_SAMPLES,
    EssCollapse,
    ScgfEstimate,
    UnsafeTilt,
    safe_tilt_bound,
    scgf_curve,
    scgf_mc,
)
from hawkes_ldp.rates import AffineCapRate, LinearRate, LogPowerRate

HALF_KERNEL = ExpSumKernel(((0.5, 1.0),))  # mass 0.5
UNIT_KERNEL = ExpSumKernel(((1.0, 1.0),))  # mass 1.0
LINEAR_RATE = LinearRate(nu=1.0, beta=1.0)
LINEAR_MODEL = LinearModel(nu=1.0, mu=0.5)


class TestClosedFormOracles:
    def test_poisson_scgf_within_three_se(self):
        # constant rate: (1/T) log E[e^{theta N}] = nu (e^theta - 1) at every T
        est = scgf_mc(UNIT_KERNEL, LinearRate(nu=2.0, beta=0.0), 0.5, 6.0, 20_000, seed=0)
        exact = 2.0 * math.expm1(0.5)
        assert abs(est.estimate - exact) <= 3.0 * est.se
        assert est.ess > MIN_EFFECTIVE_SAMPLES

    def test_linear_model_matches_fixed_point_oracle(self):
        # theta far enough below theta_c/2 that the squared weights are light-tailed
        est = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 30.0, 10_000, seed=0)
        exact = gamma_linear(0.05, LINEAR_MODEL)
        assert abs(est.estimate - exact) <= 3.0 * est.se + 2.0 / 30.0

    def test_zero_tilt_is_exact(self):
        est = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.0, 10.0, 100, seed=0)
        assert est.estimate == 0.0
        assert est.se == 0.0
        assert est.ess == 100.0


class TestDeterminism:
    def test_same_arguments_reproduce_bitwise(self):
        a = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 12.0, 500, seed=42)
        b = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 12.0, 500, seed=42)
        assert a == b

    def test_different_seeds_differ(self):
        a = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 12.0, 500, seed=0)
        b = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 12.0, 500, seed=1)
        assert a.estimate != b.estimate


class TestSafeTiltPolicy:
    def test_bound_for_linear_rate_is_critical_tilt_of_dominating_model(self):
        assert safe_tilt_bound(HALF_KERNEL, LINEAR_RATE) == pytest.approx(
            theta_critical(0.5), abs=1e-15
        )

    def test_bound_is_infinite_for_sublinear_rates(self):
        assert safe_tilt_bound(HALF_KERNEL, LogPowerRate(c=math.e, beta=1.0)) == math.inf
        assert safe_tilt_bound(HALF_KERNEL, AffineCapRate(nu=1.0, beta=1.0, cap=5.0)) == math.inf

    def test_bound_is_zero_for_supercritical_envelope(self):
        assert safe_tilt_bound(HALF_KERNEL, LinearRate(nu=1.0, beta=2.1)) == 0.0

    def test_unsafe_tilt_refused(self):
        with pytest.raises(UnsafeTilt) as exc:
            scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.25, 10.0, 100, seed=0)
        assert exc.value.theta == 0.25
        assert exc.value.theta_max == pytest.approx(theta_critical(0.5), abs=1e-15)

    def test_zero_tilt_allowed_even_with_supercritical_envelope(self):
        est = scgf_mc(HALF_KERNEL, LinearRate(nu=1.0, beta=2.1), 0.0, 2.0, 50, seed=0)
        assert est.estimate == 0.0


class TestEssRefusal:
    def test_heavy_weights_raise_typed_collapse(self):
        with pytest.raises(EssCollapse) as exc:
            scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.15, 200.0, 300, seed=0)
        assert exc.value.ess < MIN_EFFECTIVE_SAMPLES
        assert "effective sample size" in str(exc.value)

    def test_negative_tilt_can_also_collapse(self):
        # weights e^{theta N} concentrate on the smallest counts
        with pytest.raises(EssCollapse):
            scgf_mc(HALF_KERNEL, LINEAR_RATE, -0.5, 200.0, 300, seed=0)


class TestValidation:
    @pytest.mark.parametrize("horizon", [0.0, -1.0, math.inf, math.nan])
    def test_bad_horizon_rejected(self, horizon):
        with pytest.raises(ValueError):
            scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.0, horizon, 100, seed=0)

    def test_too_few_replicas_rejected(self):
        with pytest.raises(ValueError):
            scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.0, 1.0, 1, seed=0)

    def test_estimate_record_validates_fields(self):
        with pytest.raises(ValueError):
            ScgfEstimate(theta=0.1, horizon=1.0, replicas=10, estimate=math.inf, se=0.1, ess=5.0)
        with pytest.raises(ValueError):
            ScgfEstimate(theta=0.1, horizon=1.0, replicas=10, estimate=0.0, se=-0.1, ess=5.0)
        with pytest.raises(ValueError):
            ScgfEstimate(theta=0.1, horizon=1.0, replicas=10, estimate=0.0, se=0.1, ess=20.0)

    def test_curve_grid_must_be_strictly_increasing(self):
        with pytest.raises(ValueError):
            scgf_curve(HALF_KERNEL, LINEAR_RATE, [0.1, 0.0], 5.0, 100, seed=0)
        with pytest.raises(ValueError):
            scgf_curve(HALF_KERNEL, LINEAR_RATE, [], 5.0, 100, seed=0)


class TestCurve:
    def test_feasible_grid_matches_oracle_pointwise(self):
        thetas = np.array([-0.1, -0.05, 0.0, 0.05])
        curve = scgf_curve(HALF_KERNEL, LINEAR_RATE, thetas, 30.0, 8_000, seed=3)
        assert curve.sources == ("mc", "mc", "mc", "mc")
        for theta, value, err in zip(curve.thetas, curve.values, curve.errors):
            exact = gamma_linear(float(theta), LINEAR_MODEL)
            assert abs(value - exact) <= 3.0 * err + 2.0 / 30.0
        assert curve.values[2] == 0.0  # zero tilt exact
        assert curve.horizon == 30.0 and curve.replicas == 8_000

    def test_refusals_leave_tagged_gaps(self):
        thetas = np.array([-0.5, 0.0, 0.05, 0.25])
        curve = scgf_curve(HALF_KERNEL, LINEAR_RATE, thetas, 30.0, 2_000, seed=0)
        assert curve.sources == ("refused:ess", "mc", "mc", "refused:unsafe-tilt")
        assert curve.finite_mask.tolist() == [False, True, True, False]
        assert np.isfinite(curve.ess[0])  # measured, just too small
        assert math.isnan(curve.ess[3])  # never attempted

    def test_shared_paths_reproduce_single_estimates_exactly(self):
        thetas = np.array([-0.05, 0.0, 0.05])
        curve = scgf_curve(HALF_KERNEL, LINEAR_RATE, thetas, 20.0, 3_000, seed=7)
        for j, theta in enumerate(thetas):
            est = scgf_mc(HALF_KERNEL, LINEAR_RATE, float(theta), 20.0, 3_000, seed=7)
            assert est.estimate == curve.values[j]
            assert est.se == curve.errors[j]

    def test_independent_seeds_agree_within_errors(self):
        a = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 30.0, 10_000, seed=0)
        b = scgf_mc(HALF_KERNEL, LINEAR_RATE, 0.05, 30.0, 10_000, seed=1)
        assert abs(a.estimate - b.estimate) <= 3.0 * (a.se + b.se)

    def test_curve_csv_round_trip_is_lossless(self, tmp_path):
        thetas = np.array([-0.5, 0.0, 0.05, 0.25])
        curve = scgf_curve(HALF_KERNEL, LINEAR_RATE, thetas, 30.0, 2_000, seed=0)
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        loaded = ScgfCurve.from_csv(path)
        assert np.array_equal(loaded.thetas, curve.thetas)
        assert np.array_equal(loaded.values, curve.values, equal_nan=True)
        assert np.array_equal(loaded.errors, curve.errors, equal_nan=True)
        assert np.array_equal(loaded.ess, curve.ess, equal_nan=True)
        assert loaded.sources == curve.sources
        assert loaded.horizon == curve.horizon
        assert loaded.replicas == curve.replicas
