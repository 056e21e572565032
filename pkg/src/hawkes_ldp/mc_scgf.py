"""Monte Carlo route to the cumulant scaling of the event count.

Estimates ``(1/T) log E[exp(theta N_T)]`` by exact simulation: thinned
paths over a finite horizon, exponential reweighting of the counts, and
a log-of-mean estimator with a delta-method standard error.  This is
the independent cross-check for the spectral route — it never sees the
generator, only sampled paths.

The exponential weights are heavy-tailed in ``theta * N_T``; once a few
replicas carry nearly all the weight the estimator is silently biased
low.  The module therefore always computes the effective sample size of
the weights and refuses to report a value when it drops below 30 — a
typed refusal, not a number, because a number would look trustworthy.
No importance sampling or cloning is attempted: parameter ranges are
expected to be chosen so naive sampling keeps a healthy weight spread.

For rates with a genuinely linear asymptote the count's moment
generating function blows up beyond the critical tilt of the dominating
linear model; tilts at or beyond that point are rejected up front
rather than letting the weight spread degrade without bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .kernels import ExpSumKernel
from .ldp import ScgfCurve
from .linear_ldp import theta_critical
from .rates import AffineCapRate, LinearRate, LogPowerRate
from .simulator import simulate_path

__all__ = [
    "ScgfEstimate",
    "EssCollapse",
    "UnsafeTilt",
    "scgf_mc",
    "scgf_curve",
    "MIN_EFFECTIVE_SAMPLES",
]

MIN_EFFECTIVE_SAMPLES = 30.0


class EssCollapse(RuntimeError):
    """The exponential weights concentrated on too few replicas to trust.

    Carries the measured effective sample size; the estimate is withheld
    because a weight spread this degenerate biases the log-mean low by
    an unknown amount (heavy-tail regime).
    """

    def __init__(self, theta: float, ess: float, replicas: int):
        super().__init__(
            f"effective sample size {ess:.2f} of {replicas} replicas at tilt "
            f"theta={theta} is below {MIN_EFFECTIVE_SAMPLES:.0f}: the weight "
            f"distribution is too heavy-tailed for a trustworthy estimate "
            f"(reduce theta or the horizon, or raise the replica count)"
        )
        self.theta = theta
        self.ess = ess
        self.replicas = replicas


class UnsafeTilt(ValueError):
    """Tilt at or beyond the blow-up point of the dominating linear model."""

    def __init__(self, theta: float, theta_max: float):
        super().__init__(
            f"tilt theta={theta} exceeds the safe bound {theta_max:.6g} from the "
            f"rate's linear asymptote: the count's moment generating function "
            f"is not guaranteed finite there"
        )
        self.theta = theta
        self.theta_max = theta_max


@dataclass(frozen=True)
class ScgfEstimate:
    """Point estimate of the scaled log moment of the count at one tilt.

    ``se`` is the delta-method standard error of ``(1/T) log`` of the
    weight mean; ``ess`` is the effective sample size of the weights,
    always between 1 and ``replicas``.
    """

    theta: float
    horizon: float
    replicas: int
    estimate: float
    se: float
    ess: float

    def __post_init__(self):
        if not math.isfinite(self.estimate):
            raise ValueError(f"estimate must be finite, got {self.estimate}")
        if not (math.isfinite(self.se) and self.se >= 0):
            raise ValueError(f"standard error must be finite and nonnegative, got {self.se}")
        if not (0 < self.ess <= self.replicas * (1 + 1e-12)):
            raise ValueError(f"effective sample size {self.ess} outside (0, {self.replicas}]")


def _asymptotic_slope(rate) -> float | None:
    """``limsup lambda(z)/z``, when the rate family makes it knowable."""
    if isinstance(rate, LinearRate):
        return rate.beta
    if isinstance(rate, (LogPowerRate, AffineCapRate)):
        return 0.0
    return None


def safe_tilt_bound(kernel: ExpSumKernel, rate) -> float:
    """Largest tilt this module will attempt for the given model.

    For a rate with linear asymptote ``slope > 0`` the count is
    stochastically dominated by a linear model with branching ratio
    ``m = slope * sum |a_i| / b_i``; its critical tilt bounds the finite
    range of the moment generating function, so nothing beyond it is
    attempted.  Sublinear rates (slope 0) return ``inf``.  Rates whose
    asymptote the module cannot classify also return ``inf``: the
    effective-sample-size gate is then the only protection.
    """
    slope = _asymptotic_slope(rate)
    if slope is None or slope == 0.0:
        return math.inf
    branching = float(slope * np.sum(np.abs(kernel.weights) / kernel.decays))
    if branching >= 1.0:
        return 0.0
    return theta_critical(branching)


def _validate_horizon_replicas(horizon: float, replicas: int):
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    if replicas < 2:
        raise ValueError(f"need at least 2 replicas, got {replicas}")


def _simulate_counts(
    kernel: ExpSumKernel, rate, horizon: float, replicas: int, seed: int
) -> np.ndarray:
    counts = np.empty(replicas, dtype=np.int64)
    for r in range(replicas):
        counts[r] = simulate_path(kernel, rate, horizon, seed, replica=r).n_events
    return counts


def _weight_stats(theta: float, counts: np.ndarray, horizon: float) -> tuple[float, float, float]:
    """(estimate, se, ess) of the log-mean-exp of ``theta * counts``."""
    replicas = counts.size
    x = theta * counts.astype(float)
    log_r = math.log(replicas)
    l1 = float(logsumexp(x)) - log_r  # log mean weight
    l2 = float(logsumexp(2.0 * x)) - log_r  # log mean squared weight
    estimate = l1 / horizon
    var_ratio = max(math.expm1(l2 - 2.0 * l1), 0.0)  # Var(w)/mean(w)^2
    se = math.sqrt(var_ratio / replicas) / horizon
    ess = min(replicas * math.exp(2.0 * l1 - l2), float(replicas))
    return estimate, se, ess


def scgf_mc(
    kernel: ExpSumKernel, rate, theta: float, horizon: float, replicas: int, seed: int
) -> ScgfEstimate:
    """Estimate ``(1/T) log E[exp(theta N_T)]`` from ``replicas`` thinned paths.

    Replica ``r`` runs on the deterministic stream ``(seed, r)``, so the
    same arguments always reproduce the same estimate, and aggregation
    does not depend on completion order.

    Raises
    ------
    UnsafeTilt
        If ``theta`` is beyond :func:`safe_tilt_bound` for this model.
    EssCollapse
        If the effective sample size of the weights falls below 30.
    ValueError
        On nonpositive horizon or fewer than two replicas.
    """
    _validate_horizon_replicas(horizon, replicas)
    bound = safe_tilt_bound(kernel, rate)
    if theta > bound:
        raise UnsafeTilt(theta, bound)
    counts = _simulate_counts(kernel, rate, horizon, replicas, seed)
    estimate, se, ess = _weight_stats(theta, counts, horizon)
    if ess < MIN_EFFECTIVE_SAMPLES:
        raise EssCollapse(theta, ess, replicas)
    return ScgfEstimate(
        theta=theta, horizon=horizon, replicas=replicas,
        estimate=estimate, se=se, ess=ess,
    )


def scgf_curve(
    kernel: ExpSumKernel, rate, thetas, horizon: float, replicas: int, seed: int
) -> ScgfCurve:
    """Estimate the cumulant curve on a tilt grid from one shared set of paths.

    The counts are simulated once and reweighted per tilt — only the
    weights depend on ``theta``, so reuse is exact and the points are
    strongly positively correlated (good for differences along the
    curve).  Tilts that are refused (unsafe, or effective sample size
    below 30) appear as ``nan`` gaps with an explanatory source tag; the
    measured effective sample size is reported either way.
    """
    _validate_horizon_replicas(horizon, replicas)
    theta_arr = np.asarray(thetas, dtype=float)
    if theta_arr.ndim != 1 or theta_arr.size == 0:
        raise ValueError("thetas must be a nonempty 1-d grid")
    if not np.all(np.isfinite(theta_arr)):
        raise ValueError("thetas must be finite")
    if theta_arr.size > 1 and not np.all(np.diff(theta_arr) > 0):
        raise ValueError("thetas must be strictly increasing")
    bound = safe_tilt_bound(kernel, rate)
    counts = _simulate_counts(kernel, rate, horizon, replicas, seed)
    values = np.full(theta_arr.size, math.nan)
    errors = np.full(theta_arr.size, math.nan)
    ess_arr = np.full(theta_arr.size, math.nan)
    sources = []
    for j, theta in enumerate(theta_arr):
        theta = float(theta)
        if theta > bound:
            sources.append("refused:unsafe-tilt")
            continue
        estimate, se, ess = _weight_stats(theta, counts, horizon)
        ess_arr[j] = ess
        if ess < MIN_EFFECTIVE_SAMPLES:
            sources.append("refused:ess")
            continue
        values[j] = estimate
        errors[j] = se
        sources.append("mc")
    return ScgfCurve(
        thetas=theta_arr, values=values, errors=errors, sources=tuple(sources),
        ess=ess_arr, horizon=horizon, replicas=replicas,
    )
