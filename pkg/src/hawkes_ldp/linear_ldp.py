"""Closed forms for the linear self-exciting process.

For a linear rate ``lambda(z) = nu + z`` driven by a kernel of total mass
``mu < 1``, the long-run cumulant scaling of the event count has an
explicit description through the branching (cluster) picture: events form
a Poisson forest of clusters whose size distribution is Galton-Watson
with Poisson(mu) offspring.  Everything reduces to the minimal solution
of the scalar fixed-point equation

    x = exp(theta + mu * (x - 1)),

which is simultaneously the moment generating function of a cluster's
total size at tilt ``theta`` and the per-immigrant factor in the scaled
cumulant generating function ``Gamma(theta) = nu * (x - 1)``.  The
Legendre dual gives the explicit rate function ``rate_linear``.  These
closed forms are the package's cross-validation oracle for the spectral
and Monte Carlo routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import replica_rng

__all__ = [
    "LinearModel",
    "SupercriticalTilt",
    "GenerationCapExceeded",
    "CouplingResult",
    "theta_critical",
    "minimal_fixed_point",
    "gamma_linear",
    "rate_linear",
    "theta_x",
    "cluster_mgf",
    "simulate_cluster",
    "simulate_cluster_sizes",
    "coupling_recursion",
]


class SupercriticalTilt(ValueError):
    """Tilt exceeds the critical value: the fixed-point equation has no real root."""


class GenerationCapExceeded(RuntimeError):
    """A cluster simulation ran past the generation cap without dying out."""


@dataclass(frozen=True)
class LinearModel:
    """Linear model: baseline ``nu > 0``, kernel mass ``0 < mu < 1``."""

    nu: float
    mu: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"baseline nu must be positive, got {self.nu}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"kernel mass mu must lie strictly in (0, 1), got {self.mu}")


def _check_mu(mu: float) -> None:
    if not 0.0 < mu < 1.0:
        raise ValueError(f"kernel mass mu must lie strictly in (0, 1), got {mu}")


def theta_critical(mu: float) -> float:
    """Largest tilt with a real fixed point: ``mu - 1 - log(mu)``."""
    _check_mu(mu)
    return mu - 1.0 - math.log(mu)


def minimal_fixed_point(theta: float, mu: float, tol: float = 1e-12) -> float:
    """Minimal root of ``x = exp(theta + mu (x - 1))`` on ``(0, 1/mu]``.

    Bisection on ``[0, 1/mu]`` down to residual ``tol`` (or bracket width
    1e-13), then two guarded Newton steps.  At the critical tilt the two
    roots merge at ``1/mu``; that tangency is detected through the
    residual at the right endpoint and returns ``1/mu`` exactly.

    Raises
    ------
    SupercriticalTilt
        If ``theta > theta_critical(mu)``: no real root exists.
    """
    _check_mu(mu)
    crit = theta_critical(mu)
    if theta > crit:
        raise SupercriticalTilt(
            f"theta={theta} exceeds the critical tilt {crit:.12g} for mu={mu}"
        )
    if theta == 0.0:
        return 1.0  # x = 1 solves 1 = exp(0) and is minimal

    def g(x: float) -> float:
        return math.exp(theta + mu * (x - 1.0))

    def f(x: float) -> float:
        return x - g(x)

    hi = 1.0 / mu
    f_hi = f(hi)
    if f_hi < 0.0 or abs(f_hi) <= tol:
        # at (or a float ulp past) tangency the endpoint is already the root
        return hi

    lo = 0.0
    x = hi
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol:
            x = mid
            break
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    else:
        x = 0.5 * (lo + hi)

    for _ in range(2):
        fx = f(x)
        slope = 1.0 - mu * g(x)
        if fx == 0.0 or abs(slope) < 1e-14:
            break
        x -= fx / slope
    return x


def gamma_linear(theta: float, model: LinearModel) -> float:
    """Long-run cumulant scaling of the count at tilt ``theta``.

    Equals ``nu * (x - 1)`` with ``x`` the minimal fixed point; infinite
    above the critical tilt (returned as ``math.inf``; curve containers
    carry an explicit finiteness mask instead of doing arithmetic on it).
    """
    try:
        x = minimal_fixed_point(theta, model.mu)
    except SupercriticalTilt:
        return math.inf
    return model.nu * (x - 1.0)


def rate_linear(x: float, model: LinearModel) -> float:
    """Large-deviation rate of observing ``x`` events per unit time.

    Closed form ``x log(x / (nu + x mu)) - x + mu x + nu`` for ``x > 0``,
    with ``rate_linear(0) = nu`` by continuity and ``+inf`` for ``x < 0``
    (impossible counts, by convention not an exception).
    """
    nu, mu = model.nu, model.mu
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return nu
    return x * math.log(x / (nu + x * mu)) - x + mu * x + nu


def theta_x(x: float, model: LinearModel) -> float:
    """Maximizing tilt in the variational form of the rate function.

    ``theta_x = log(x / (nu + x mu)) - mu (x / (nu + x mu) - 1)`` solves
    the first-order condition of ``sup_theta [theta x - Gamma(theta)]``;
    plugging it back reproduces :func:`rate_linear` as
    ``x theta_x + nu - nu x / (nu + mu x)``.
    """
    if x <= 0.0:
        raise ValueError(f"the maximizing tilt is defined for x > 0, got {x}")
    nu, mu = model.nu, model.mu
    w = x / (nu + mu * x)
    return math.log(w) - mu * (w - 1.0)


def cluster_mgf(theta: float, mu: float) -> float:
    """Moment generating function ``E[exp(theta * S)]`` of a cluster size.

    ``S`` is the total progeny of a Galton-Watson tree with Poisson(mu)
    offspring (root included).  Its MGF satisfies the same fixed-point
    equation as the per-immigrant factor, so this delegates to
    :func:`minimal_fixed_point` and agrees with it bit for bit.
    """
    return minimal_fixed_point(theta, mu)


_GENERATION_CAP = 1_000_000


def simulate_cluster(mu: float, seed: int) -> int:
    """Total progeny of one Poisson(mu) Galton-Watson tree (root included)."""
    _check_mu(mu)
    rng = replica_rng(seed)
    alive = 1
    total = 1
    for _ in range(_GENERATION_CAP):
        if alive == 0:
            return total
        alive = int(rng.poisson(mu * alive))
        total += alive
    raise GenerationCapExceeded(
        f"cluster still alive after {_GENERATION_CAP} generations (mu={mu})"
    )


def simulate_cluster_sizes(mu: float, n: int, seed: int) -> np.ndarray:
    """Vector of ``n`` independent cluster sizes (one generator, generation-synchronous)."""
    _check_mu(mu)
    if n < 1:
        raise ValueError(f"need n >= 1 clusters, got {n}")
    rng = replica_rng(seed)
    alive = np.ones(n, dtype=np.int64)
    total = np.ones(n, dtype=np.int64)
    for _ in range(_GENERATION_CAP):
        if not alive.any():
            return total
        alive = rng.poisson(mu * alive)
        total += alive
    raise GenerationCapExceeded(
        f"some cluster still alive after {_GENERATION_CAP} generations (mu={mu})"
    )


@dataclass(frozen=True)
class CouplingResult:
    """Trace of the coupling recursion.

    ``values[j]`` is the j-th iterate (``values[0] = theta``).  ``diverged``
    certifies the iterates escaped past ``log(1/mu)``, which subcritical
    iterations never do; ``converged`` means successive iterates settled
    within tolerance, and ``limit`` is then the final iterate.
    """

    values: np.ndarray
    converged: bool
    diverged: bool
    limit: float | None


def coupling_recursion(
    theta: float,
    mu: float,
    iters: int | None = None,
    tol: float = 1e-12,
) -> CouplingResult:
    """Iterate ``f <- (exp(f) - 1) mu + theta`` from ``f = theta``.

    The iteration increases monotonically to the logarithm of the minimal
    fixed point when one exists; above the critical tilt it grows without
    bound.  Crossing ``log(1/mu)`` is a proof of divergence (the minimal
    root never exceeds ``1/mu``), so that is the divergence certificate.

    Parameters
    ----------
    iters : int, optional
        Run exactly this many iterates.  Default: iterate until the step
        falls below ``tol`` or divergence is certified (at most 100000).
    """
    _check_mu(mu)
    cap = iters if iters is not None else 100_000
    if cap < 1:
        raise ValueError("need at least one iterate")
    escape = math.log(1.0 / mu) + 1e-9
    values = [theta]
    converged = diverged = False
    f = theta
    for _ in range(cap - 1):
        f_next = (math.exp(f) - 1.0) * mu + theta
        values.append(f_next)
        if f_next > escape or not math.isfinite(f_next):
            diverged = True
            f = f_next
            break
        if abs(f_next - f) <= tol:
            f = f_next
            converged = True
            if iters is None:
                break
        else:
            converged = False
        f = f_next
    return CouplingResult(
        values=np.array(values),
        converged=converged,
        diverged=diverged,
        limit=float(f) if converged and not diverged else None,
    )
