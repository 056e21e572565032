"""Large-deviation toolkit for Markovian self-exciting point processes.

The package computes the scaled cumulant generating function of the event
count, its Legendre transform (the rate function), ergodicity certificates,
and sum-of-exponentials kernel approximations, and cross-validates every
numerical route against exact simulation and the linear-model closed forms.

Module map
----------
``kernels``     sum-of-exponentials kernels, sampled kernels, positive fits
``rates``       intensity maps lambda(z) and their growth diagnostics
``simulator``   exact thinning simulation, pathwise identities, branching
``linear_ldp``  closed forms for the linear model (fixed points, rates)
``spectral``    tilted-generator eigenvalue route and drift certificates
``mc_scgf``     importance-weighted Monte Carlo route with refusal policy
``ldp``         curve containers, Legendre transform, convergence study
``acceptance``  end-to-end shipped-guarantee checks
``cli``         reproducible command-line frontend (``hawkes-ldp``)
"""

from .kernels import ExpSumKernel, SampledKernel, approx_error, fit_exp_sum
from .ldp import (
    RateCurve,
    ScgfCurve,
    convexity_check,
    gamma_convergence_experiment,
    legendre,
)
from .linear_ldp import (
    LinearModel,
    cluster_mgf,
    coupling_recursion,
    gamma_linear,
    minimal_fixed_point,
    rate_linear,
    theta_critical,
    theta_x,
)
from .mc_scgf import EssCollapse, UnsafeTilt, safe_tilt_bound, scgf_curve, scgf_mc
from .rates import AffineCapRate, LinearRate, LogPowerRate
from .simulator import (
    count_identity_residual,
    ergodic_stats,
    simulate_counts_cluster,
    simulate_path,
)
from .spectral import (
    GridSpec,
    finiteness_bound,
    gamma_spectral,
    lyapunov_check,
    stationary_mean_linear,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ExpSumKernel",
    "SampledKernel",
    "approx_error",
    "fit_exp_sum",
    "RateCurve",
    "ScgfCurve",
    "convexity_check",
    "gamma_convergence_experiment",
    "legendre",
    "LinearModel",
    "cluster_mgf",
    "coupling_recursion",
    "gamma_linear",
    "minimal_fixed_point",
    "rate_linear",
    "theta_critical",
    "theta_x",
    "EssCollapse",
    "UnsafeTilt",
    "safe_tilt_bound",
    "scgf_curve",
    "scgf_mc",
    "AffineCapRate",
    "LinearRate",
    "LogPowerRate",
    "count_identity_residual",
    "ergodic_stats",
    "simulate_counts_cluster",
    "simulate_path",
    "GridSpec",
    "finiteness_bound",
    "gamma_spectral",
    "lyapunov_check",
    "stationary_mean_linear",
]
