"""Curve containers, Legendre transforms, convexity, kernel-convergence experiment."""

import math

import numpy as np
import pytest
from scipy.special import logsumexp

from hawkes_ldp.kernels import ExpSumKernel, SampledKernel, fit_exp_sum
from hawkes_ldp.ldp import (
    ConvexityReport,
    RateCurve,
    ScgfCurve,
    convexity_check,
    gamma_convergence_experiment,
    legendre,
)
from hawkes_ldp.linear_ldp import (
    LinearModel,
    gamma_linear,
    rate_linear,
    theta_critical,
)
from hawkes_ldp.mc_scgf import scgf_mc
from hawkes_ldp.rates import LogPowerRate

MODEL = LinearModel(nu=1.0, mu=0.5)
THETA_C = theta_critical(0.5)


def linear_gamma_curve(n: int = 800, power: int = 2) -> ScgfCurve:
    """Exact cumulant curve on [-3, theta_c], graded toward the endpoint cusp."""
    u = np.linspace(0.0, 1.0, n)
    thetas = THETA_C - (THETA_C + 3.0) * (1.0 - u) ** power
    thetas[-1] = THETA_C
    thetas = np.unique(thetas)
    values = np.array([gamma_linear(float(t), MODEL) for t in thetas])
    return ScgfCurve(
        thetas=thetas,
        values=values,
        errors=np.zeros(thetas.size),
        sources=tuple("exact" for _ in thetas),
    )


class TestScgfCurveContainer:
    def test_rejects_unsorted_grid(self):
        with pytest.raises(ValueError):
            ScgfCurve(
                thetas=np.array([0.1, 0.0]), values=np.zeros(2),
                errors=np.zeros(2), sources=("a", "b"),
            )

    def test_rejects_minus_infinity(self):
        with pytest.raises(ValueError):
            ScgfCurve(
                thetas=np.array([0.0, 1.0]), values=np.array([0.0, -math.inf]),
                errors=np.zeros(2), sources=("a", "b"),
            )

    def test_zero_tilt_anchor_enforced(self):
        with pytest.raises(ValueError):
            ScgfCurve(
                thetas=np.array([-1.0, 0.0, 1.0]), values=np.array([-0.5, 0.01, 0.7]),
                errors=np.zeros(3), sources=("a", "b", "c"),
            )
        # ...but a matching error bar excuses the offset
        curve = ScgfCurve(
            thetas=np.array([-1.0, 0.0, 1.0]), values=np.array([-0.5, 0.01, 0.7]),
            errors=np.full(3, 0.02), sources=("a", "b", "c"),
        )
        assert curve.values[1] == 0.01

    def test_plus_infinity_marks_blowup(self):
        curve = ScgfCurve(
            thetas=np.array([0.0, 0.1, 0.3]), values=np.array([0.0, 0.26, math.inf]),
            errors=np.array([0.0, 0.0, math.nan]), sources=("e", "e", "blowup"),
        )
        assert curve.finite_mask.tolist() == [True, True, False]


class TestRateCurveContainer:
    def test_rejects_genuinely_negative_values(self):
        with pytest.raises(ValueError):
            RateCurve(
                xs=np.array([1.0, 2.0]), values=np.array([0.1, -0.1]),
                truncated=np.zeros(2, dtype=bool), sources=("a", "b"),
            )

    def test_floors_rounding_noise_to_zero(self):
        curve = RateCurve(
            xs=np.array([1.0, 2.0]), values=np.array([0.1, -1e-12]),
            truncated=np.zeros(2, dtype=bool), sources=("a", "b"),
        )
        assert curve.values[1] == 0.0

    def test_csv_round_trip(self, tmp_path):
        curve = RateCurve(
            xs=np.array([0.5, 2.0, 4.0]), values=np.array([0.2918546, 0.0, 0.1507283]),
            truncated=np.array([True, False, False]), sources=("l", "l", "l"),
        )
        path = tmp_path / "rate.csv"
        curve.to_csv(path)
        loaded = RateCurve.from_csv(path)
        assert np.array_equal(loaded.xs, curve.xs)
        assert np.array_equal(loaded.values, curve.values)
        assert np.array_equal(loaded.truncated, curve.truncated)
        assert loaded.sources == curve.sources


class TestLegendre:
    def test_linear_rate_function_recovered(self):
        curve = linear_gamma_curve()
        xs = np.linspace(0.2, 6.0, 117)
        rate = legendre(curve, xs)
        exact = np.array([rate_linear(float(x), MODEL) for x in xs])
        assert not rate.truncated.any()
        assert np.max(np.abs(rate.values - exact)) <= 1e-3

    def test_rate_zero_at_ergodic_mean(self):
        rate = legendre(linear_gamma_curve(), np.array([1.5, 2.0, 2.5]))
        assert abs(rate.values[1]) <= 1e-4

    def test_value_at_four_matches_frozen_oracle(self):
        rate = legendre(linear_gamma_curve(), np.array([4.0]))
        assert rate.values[0] == pytest.approx(0.15072828980712316, abs=1e-3)

    def test_rate_near_zero_approaches_base_rate_and_is_flagged(self):
        # I(0) = nu needs theta -> -inf; a bounded grid gets close from below
        # and must flag that its sup sits on the boundary
        thetas = np.linspace(-8.0, THETA_C, 2000)
        values = np.array([gamma_linear(float(t), MODEL) for t in thetas])
        curve = ScgfCurve(
            thetas=thetas, values=values, errors=np.zeros(thetas.size),
            sources=tuple("exact" for _ in thetas),
        )
        rate = legendre(curve, np.array([1e-4]))
        assert rate.values[0] == pytest.approx(1.0, abs=5e-3)
        assert rate.truncated[0]

    def test_round_trip_recovers_cumulant_curve(self):
        rate = legendre(linear_gamma_curve(), np.linspace(0.05, 8.0, 400))
        back = legendre(rate, np.linspace(-1.0, 0.15, 60))
        exact = np.array([gamma_linear(float(t), MODEL) for t in back.thetas])
        assert np.max(np.abs(back.values - exact)) <= 1e-3

    def test_flat_curve_returns_boundary_value_flagged(self):
        flat = ScgfCurve(
            thetas=np.linspace(-1.0, 1.0, 11), values=np.zeros(11),
            errors=np.zeros(11), sources=("z",) * 11,
        )
        rate = legendre(flat, np.array([0.0, 1.0, 2.0]))
        assert np.array_equal(rate.values, np.array([0.0, 1.0, 2.0]))  # theta_max * x
        assert rate.truncated.all()

    def test_non_convex_input_rejected(self):
        base = linear_gamma_curve(n=50, power=1)
        values = base.values.copy()
        values[20] += 0.05
        bad = ScgfCurve(
            thetas=base.thetas, values=values, errors=base.errors, sources=base.sources
        )
        with pytest.raises(ValueError, match="not convex"):
            legendre(bad, np.array([1.0, 2.0]))

    def test_rejects_bad_output_grid(self):
        with pytest.raises(ValueError):
            legendre(linear_gamma_curve(n=50), np.array([2.0, 1.0]))


class TestConvexity:
    def test_linear_cumulant_curve_passes(self):
        report = convexity_check(linear_gamma_curve(n=50, power=1))
        assert isinstance(report, ConvexityReport)
        assert report.ok
        assert report.min_curvature >= -1e-9

    def test_corrupted_point_located(self):
        base = linear_gamma_curve(n=50, power=1)
        values = base.values.copy()
        values[20] += 0.05
        bad = ScgfCurve(
            thetas=base.thetas, values=values, errors=base.errors, sources=base.sources
        )
        report = convexity_check(bad)
        assert not report.ok
        assert report.argmin_index in (19, 20, 21)
        assert report.location == pytest.approx(base.thetas[report.argmin_index])

    def test_rate_curve_is_convex_too(self):
        rate = legendre(linear_gamma_curve(), np.linspace(0.3, 5.0, 80))
        assert convexity_check(rate).ok

    def test_two_points_error(self):
        tiny = ScgfCurve(
            thetas=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]),
            errors=np.zeros(2), sources=("a", "b"),
        )
        with pytest.raises(ValueError):
            convexity_check(tiny)

    def test_wrong_type_rejected(self):
        with pytest.raises(TypeError):
            convexity_check([0.0, 1.0, 2.0])


def brute_force_count(h, rate, horizon: float, rng) -> int:
    """Direct thinning against the full event history (no Markov state).

    Valid for decreasing ``h`` and nondecreasing ``rate``: the excitation
    sum only decays between events, so the intensity at the previous
    event time dominates until the next one.  Quadratic cost per path —
    desk scale only.
    """
    times: list[float] = []
    t = 0.0
    while True:
        z = sum(h(t - tau) for tau in times)
        bound = float(rate(z))
        t += rng.exponential() / bound
        if t >= horizon:
            return len(times)
        z_new = sum(h(t - tau) for tau in times)
        if rng.uniform() * bound <= float(rate(z_new)):
            times.append(t)


class TestConvergenceExperiment:
    def setup_method(self):
        t = np.linspace(0.0, 50.0, 1001)
        self.target = SampledKernel(t=t, values=(1.0 + t) ** -2.0)
        self.rate = LogPowerRate(c=math.e, beta=1.0)

    def test_single_exponential_target_gives_constant_column(self):
        t = np.linspace(0.0, 40.0, 1201)
        target = SampledKernel(t=t, values=np.exp(-1.2 * t))
        report = gamma_convergence_experiment(
            target, self.rate, thetas=[-0.3, 0.2], orders=(1, 2),
            decay_grid=np.array([0.6, 0.9]),
        )
        assert report.routes == ("spectral", "spectral")
        assert report.n_terms == (1, 1)  # order-2 fit collapses to the exact term
        assert np.all(np.abs(np.diff(report.gammas, axis=0)) <= 1e-6)
        assert report.kernel_gaps[0] <= 1e-8

    def test_mc_route_produces_finite_table(self):
        report = gamma_convergence_experiment(
            self.target, self.rate, thetas=[0.3], orders=(2, 4),
            horizon=8.0, replicas=3_000, seed=0,
        )
        assert report.routes == ("mc", "mc")
        assert np.all(np.isfinite(report.gammas))
        assert report.gammas.shape == (2, 1)
        assert report.n_terms == (3, 10)
        assert report.manifest["replicas"] == 3_000
        assert math.isnan(report.theta_lipschitz[0])  # single tilt: no slope

    def test_tilt_slope_stabilizes_across_orders(self):
        report = gamma_convergence_experiment(
            self.target, self.rate, thetas=[0.2, 0.3], orders=(2, 4, 6),
            horizon=8.0, replicas=5_000, seed=1,
        )
        lip = report.theta_lipschitz
        assert all(0.5 < c < 4.0 for c in lip)
        assert abs(lip[2] - lip[1]) <= 0.4  # nearby fits, nearly equal slopes

    def test_needs_two_orders(self):
        with pytest.raises(ValueError):
            gamma_convergence_experiment(self.target, self.rate, thetas=[0.3], orders=(4,))

    def test_table_csv_layout(self, tmp_path):
        report = gamma_convergence_experiment(
            self.target, self.rate, thetas=[0.3], orders=(2, 4),
            horizon=6.0, replicas=2_000, seed=0,
        )
        path = tmp_path / "table.csv"
        report.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "order,n_terms,fit_l1,route,theta,gamma"
        assert len(lines) == 1 + 2 * 1

    def test_fitted_kernel_agrees_with_raw_history_simulation(self):
        # order-6 Markov lift vs direct thinning of the raw kernel at small T
        theta, horizon, n_brute = 0.5, 5.0, 3_000
        fitted = fit_exp_sum(self.target, 6)
        est = scgf_mc(fitted, self.rate, theta, horizon, 6_000, seed=0)
        rng = np.random.default_rng(12345)
        counts = np.array(
            [brute_force_count(lambda s: (1.0 + s) ** -2.0, self.rate, horizon, rng)
             for _ in range(n_brute)]
        )
        log_mean = logsumexp(theta * counts) - math.log(n_brute)
        brute_est = log_mean / horizon
        log_mean2 = logsumexp(2.0 * theta * counts) - math.log(n_brute)
        brute_se = math.sqrt(max(math.expm1(log_mean2 - 2.0 * log_mean), 0.0) / n_brute) / horizon
        tol = 3.0 * (est.se + brute_se) + 0.05  # allowance for the fit's L1 error
        assert abs(est.estimate - brute_est) <= tol
