"""Exact simulation of the Markovian self-exciting process.

The process state is the vector ``Z`` of per-term excitation levels: term
``i`` of the kernel contributes ``Z_i``, which decays at rate ``b_i``
between events and jumps by ``a_i`` at each event.  The event intensity
is ``lambda(sum_i Z_i)``.

Sampling uses thinning (rejection from a dominating constant rate).
Because every positive component only decays between events and every
negative component only recovers toward zero, the intensity between
events is bounded by the rate evaluated at
``max(sum_{a_i > 0} Z_i, sum_i Z_i)`` frozen at the current state, and
the bound is refreshed after every accepted or rejected candidate.  The
rate map must be nondecreasing for this bound to be valid; all shipped
families are.

Streams are reproducible: replica ``k`` of master seed ``s`` uses the
documented split ``SeedSequence(s, spawn_key=(k,))``, so results are
independent of scheduling and identical across runs.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from ._rng import replica_rng
from .kernels import ExpSumKernel

__all__ = [
    "MarkovState",
    "PathSample",
    "ErgodicStats",
    "ThinningBoundError",
    "decay",
    "jump",
    "simulate_path",
    "excitation_integral",
    "count_identity_residual",
    "ergodic_stats",
    "simulate_counts_cluster",
    "write_events_csv",
    "read_events_csv",
    "write_events_binary",
    "read_events_binary",
]

_BLOCK = 512  # RNG draws are consumed from fixed-size blocks, in order


class ThinningBoundError(RuntimeError):
    """The dominating rate was exceeded inside an inter-event interval.

    This cannot happen for a nondecreasing rate map; seeing it means the
    supplied rate is not monotone and the simulation would be biased.
    """


@dataclass(frozen=True, eq=False)
class MarkovState:
    """Excitation vector ``z`` (one component per kernel term) at time ``t``."""

    z: np.ndarray
    t: float

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        if z.ndim != 1 or not np.all(np.isfinite(z)):
            raise ValueError("state vector must be a finite 1-d array")
        object.__setattr__(self, "z", z)

    @property
    def total(self) -> float:
        return float(self.z.sum())


def decay(state: MarkovState, kernel: ExpSumKernel, dt: float) -> MarkovState:
    """Advance the state ``dt`` forward with no events: ``Z_i <- Z_i e^{-b_i dt}``."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return MarkovState(state.z * np.exp(-kernel.decays * dt), state.t + dt)


def jump(state: MarkovState, kernel: ExpSumKernel) -> MarkovState:
    """Apply one event at the current time: ``Z_i <- Z_i + a_i``."""
    return MarkovState(state.z + kernel.weights, state.t)


@dataclass(frozen=True, eq=False)
class PathSample:
    """One realized path: event times on ``[0, horizon]`` plus endpoints.

    Carries the kernel and the initial/final excitation vectors so that
    pathwise functionals (excitation integrals, identity residuals) can be
    recomputed exactly without rerunning the simulation.
    """

    times: np.ndarray
    horizon: float
    kernel: ExpSumKernel
    initial_state: np.ndarray
    final_state: np.ndarray
    seed: int
    replica: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "initial_state", np.atleast_1d(np.asarray(self.initial_state, dtype=float)))
        object.__setattr__(self, "final_state", np.atleast_1d(np.asarray(self.final_state, dtype=float)))
        if times.size and (times[0] < 0 or times[-1] > self.horizon or np.any(np.diff(times) < 0)):
            raise ValueError("event times must be sorted within [0, horizon]")

    @property
    def n_events(self) -> int:
        return int(self.times.size)


def simulate_path(
    kernel: ExpSumKernel,
    rate,
    horizon: float,
    seed: int,
    replica: int = 0,
    z0: np.ndarray | None = None,
) -> PathSample:
    """Draw one path of the process by thinning.

    Parameters
    ----------
    kernel : ExpSumKernel
        Excitation kernel; one state component per term.
    rate : rate map
        Nondecreasing intensity map (see :mod:`hawkes_ldp.rates`).
    horizon : float
        Simulation end time (start is 0).
    seed, replica : int
        Master seed and replica index; the pair fixes the path exactly.
    z0 : array, optional
        Warm-start excitation vector (default: all zeros).

    Returns
    -------
    PathSample
        Event times, final state, and the inputs needed to replay the path.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    a = kernel.weights
    b = kernel.decays
    d = a.size
    if z0 is None:
        z_init = np.zeros(d)
    else:
        z_init = np.atleast_1d(np.asarray(z0, dtype=float))
        if z_init.shape != (d,):
            raise ValueError(f"z0 must have shape ({d},), got {z_init.shape}")
    rng = replica_rng(seed, replica)

    if d == 1:
        times, z_final = _thin_scalar(float(a[0]), float(b[0]), rate, horizon, rng, float(z_init[0]))
        final = np.array([z_final])
    else:
        times, final = _thin_vector(a, b, rate, horizon, rng, z_init.copy())

    return PathSample(
        times=np.array(times),
        horizon=horizon,
        kernel=kernel,
        initial_state=z_init,
        final_state=final,
        seed=seed,
        replica=replica,
    )


def _scalar_rate(rate):
    """Fastest available scalar evaluator for a rate map."""
    fn = getattr(rate, "_eval_scalar", None)
    if fn is not None:
        return fn
    return lambda z: float(rate.eval(z))


def _thin_scalar(a, b, rate, horizon, rng, z):
    """Single-term fast path; identical draw consumption to the vector path."""
    lam_of = _scalar_rate(rate)
    exp = math.exp
    times = []
    append = times.append
    exps = rng.standard_exponential(_BLOCK)
    unis = rng.random(_BLOCK)
    idx = 0
    t = 0.0
    while True:
        if idx == _BLOCK:
            exps = rng.standard_exponential(_BLOCK)
            unis = rng.random(_BLOCK)
            idx = 0
        lam_bar = lam_of(z if z > 0.0 else 0.0)
        t_next = t + exps[idx] / lam_bar
        if t_next > horizon:
            z *= exp(-b * (horizon - t))
            break
        z *= exp(-b * (t_next - t))
        lam = lam_of(z if z > 0.0 else 0.0)
        if lam > lam_bar * (1.0 + 1e-12):
            raise ThinningBoundError(
                f"rate {lam} exceeded its bound {lam_bar}; the rate map is not nondecreasing"
            )
        if unis[idx] * lam_bar <= lam:
            append(t_next)
            z += a
        t = t_next
        idx += 1
    return times, z


def _thin_vector(a, b, rate, horizon, rng, z):
    lam_of = _scalar_rate(rate)
    positive = a > 0.0
    any_negative = bool((~positive).any())
    times = []
    append = times.append
    exps = rng.standard_exponential(_BLOCK)
    unis = rng.random(_BLOCK)
    idx = 0
    t = 0.0
    while True:
        if idx == _BLOCK:
            exps = rng.standard_exponential(_BLOCK)
            unis = rng.random(_BLOCK)
            idx = 0
        total = z.sum()
        bound_arg = max(z[positive].sum(), total) if any_negative else total
        lam_bar = lam_of(bound_arg if bound_arg > 0.0 else 0.0)
        t_next = t + exps[idx] / lam_bar
        if t_next > horizon:
            z *= np.exp(-b * (horizon - t))
            break
        z *= np.exp(-b * (t_next - t))
        s = z.sum()
        lam = lam_of(s if s > 0.0 else 0.0)
        if lam > lam_bar * (1.0 + 1e-12):
            raise ThinningBoundError(
                f"rate {lam} exceeded its bound {lam_bar}; the rate map is not nondecreasing"
            )
        if unis[idx] * lam_bar <= lam:
            append(t_next)
            z += a
        t = t_next
        idx += 1
    return times, z


def excitation_integral(path: PathSample, t_from: float = 0.0, t_to: float | None = None) -> float:
    """Exact ``integral of sum_i Z_i(s) ds`` over ``[t_from, t_to]``.

    Replays the path segment by segment; within each inter-event interval
    each component is a pure exponential, so the integral is closed form.
    Compensated summation keeps the result independent of segment order.
    """
    if t_to is None:
        t_to = path.horizon
    if not 0.0 <= t_from <= t_to <= path.horizon:
        raise ValueError(f"need 0 <= t_from <= t_to <= horizon, got [{t_from}, {t_to}]")
    a = path.kernel.weights
    b = path.kernel.decays
    z = path.initial_state.astype(float).copy()
    pieces = []
    t_seg = 0.0
    for t_event in np.append(path.times, path.horizon):
        lo = max(t_seg, t_from)
        hi = min(t_event, t_to)
        if hi > lo:
            # integral of z_i e^{-b_i (s - t_seg)} over [lo, hi]
            contrib = (z / b) * (np.exp(-b * (lo - t_seg)) - np.exp(-b * (hi - t_seg)))
            pieces.append(contrib.sum())
        z = z * np.exp(-b * (t_event - t_seg)) + a  # state right after the event
        t_seg = t_event
    return math.fsum(pieces)


def count_identity_residual(path: PathSample) -> float:
    """Residual of the pathwise count identity (single-term kernels).

    For ``d = 1`` the event count satisfies
    ``N_T = (Z_T - Z_0 + b * integral of Z) / a`` exactly; the residual is
    the absolute defect of the replayed right-hand side, and should be at
    floating-point scale (~1e-8 N_T at worst) for a correct simulation.
    """
    if path.kernel.dim != 1:
        raise ValueError("the count identity check is defined for single-term kernels")
    a, b = path.kernel.terms[0]
    integral = excitation_integral(path)
    recon = (float(path.final_state[0]) - float(path.initial_state[0]) + b * integral) / a
    return abs(path.n_events - recon)


@dataclass(frozen=True)
class ErgodicStats:
    """Long-run averages with batch-mean standard errors.

    Each independent path (or each time batch, when a single path is
    supplied) contributes one batch mean; the standard errors are the
    spread of those batch means.
    """

    mean_excitation: float
    se_excitation: float
    mean_rate: float
    se_rate: float
    n_batches: int
    window: float


def ergodic_stats(paths, burn_in: float) -> ErgodicStats:
    """Time-averaged excitation and event rate over ``[burn_in, horizon]``.

    Parameters
    ----------
    paths : PathSample or list of PathSample
        Replicas of the same model.  A single path is split into 32 time
        batches; multiple paths are treated as one batch each.
    burn_in : float
        Initial stretch discarded from every path.
    """
    if isinstance(paths, PathSample):
        paths = [paths]
    if not paths:
        raise ValueError("need at least one path")
    horizon = paths[0].horizon
    for p in paths:
        if p.horizon != horizon:
            raise ValueError("all paths must share the same horizon")
    if not 0.0 <= burn_in < horizon:
        raise ValueError(f"burn_in must lie in [0, horizon), got {burn_in}")

    if len(paths) == 1:
        edges = np.linspace(burn_in, horizon, 33)
        spans = list(zip(edges[:-1], edges[1:]))
        jobs = [(paths[0], lo, hi) for lo, hi in spans]
    else:
        jobs = [(p, burn_in, horizon) for p in paths]

    ex_means, rate_means = [], []
    for p, lo, hi in jobs:
        width = hi - lo
        ex_means.append(excitation_integral(p, lo, hi) / width)
        rate_means.append(np.count_nonzero((p.times > lo) & (p.times <= hi)) / width)
    n = len(jobs)
    ex_mean = math.fsum(ex_means) / n
    rate_mean = math.fsum(rate_means) / n
    if n > 1:
        se_ex = math.sqrt(math.fsum((v - ex_mean) ** 2 for v in ex_means) / (n - 1) / n)
        se_rate = math.sqrt(math.fsum((v - rate_mean) ** 2 for v in rate_means) / (n - 1) / n)
    else:
        se_ex = se_rate = float("nan")
    return ErgodicStats(
        mean_excitation=ex_mean,
        se_excitation=se_ex,
        mean_rate=rate_mean,
        se_rate=se_rate,
        n_batches=n,
        window=horizon - burn_in,
    )


def simulate_counts_cluster(
    nu: float,
    kernel: ExpSumKernel,
    horizon: float,
    n_paths: int,
    seed: int,
) -> np.ndarray:
    """Event counts on ``[0, horizon]`` via the branching construction.

    Linear-rate case only (``lambda(z) = nu + z``): immigrants arrive as a
    Poisson process of rate ``nu``; every event at time ``s`` independently
    spawns children on ``(s, infinity)`` with intensity ``h(u - s)``, and
    children beyond the horizon are discarded (Poisson thinning, exact).
    This is an independent construction of the same count law the thinning
    simulator produces, which makes it a distributional cross-check.

    Requires a kernel with all-positive weights (the branching picture
    needs ``h >= 0`` as a birth intensity).
    """
    if nu <= 0 or horizon <= 0:
        raise ValueError("nu and horizon must be positive")
    if n_paths < 1:
        raise ValueError("need at least one path")
    a = kernel.weights
    b = kernel.decays
    if np.any(a <= 0):
        raise ValueError("the branching construction needs all-positive kernel weights")
    mass = kernel.l1_norm()
    weights = (a / b) / mass
    cum_weights = np.cumsum(weights)
    counts = np.empty(n_paths, dtype=np.int64)
    for k in range(n_paths):
        rng = replica_rng(seed, k)
        n_immigrants = rng.poisson(nu * horizon)
        gen = rng.random(n_immigrants) * horizon
        total = gen.size
        while gen.size:
            kids = rng.poisson(mass, gen.size)
            parents = np.repeat(gen, kids)
            if parents.size == 0:
                break
            comp = np.searchsorted(cum_weights, rng.random(parents.size))
            lags = rng.standard_exponential(parents.size) / b[comp]
            gen = parents + lags
            gen = gen[gen <= horizon]
            total += gen.size
        counts[k] = total
    return counts


# ---------------------------------------------------------------------------
# event exports

def write_events_csv(sample: PathSample, path) -> None:
    """One event time per row, with replay metadata in comment headers."""
    meta = {
        "horizon": sample.horizon,
        "seed": sample.seed,
        "replica": sample.replica,
        "kernel": sample.kernel.to_dict(),
        "initial_state": sample.initial_state.tolist(),
        "final_state": sample.final_state.tolist(),
    }
    with open(path, "w") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={json.dumps(value)}\n")
        fh.write("time\n")
        for t in sample.times:
            fh.write(f"{t:.17g}\n")


def read_events_csv(path) -> PathSample:
    meta = {}
    times = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = json.loads(value)
            elif line != "time":
                times.append(float(line))
    return PathSample(
        times=np.array(times),
        horizon=float(meta["horizon"]),
        kernel=ExpSumKernel.from_dict(meta["kernel"]),
        initial_state=np.array(meta["initial_state"]),
        final_state=np.array(meta["final_state"]),
        seed=int(meta["seed"]),
        replica=int(meta["replica"]),
    )


def write_events_binary(sample: PathSample, path) -> None:
    """Compact record: little-endian uint64 count, then count float64 times."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", sample.n_events))
        fh.write(sample.times.astype("<f8").tobytes())


def read_events_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<Q", fh.read(8))
        times = np.frombuffer(fh.read(8 * count), dtype="<f8")
        if times.size != count:
            raise ValueError(f"truncated record: expected {count} times, got {times.size}")
    return times.copy()
