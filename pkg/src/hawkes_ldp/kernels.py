"""Excitation kernels: exponential sums, raw samples, and approximation.

An excitation kernel ``h`` maps the age of a past event to its current
contribution to the driving state.  Sums of exponentials
``h(t) = sum_i a_i * exp(-b_i * t)`` are the Markovian class: each term
feeds one coordinate of the process state.  Arbitrary sampled kernels can
be approximated by that class with :func:`fit_exp_sum`, which fits the
square root of ``h`` by least squares on a fixed geometric grid of decay
rates and then squares the fit, so the approximant is nonnegative by
construction.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExpSumKernel",
    "SampledKernel",
    "PositivityReport",
    "ApproxError",
    "IllConditionedFit",
    "validate_positive",
    "default_validation_grid",
    "geometric_decay_grid",
    "fit_exp_sum",
    "approx_error",
]


class IllConditionedFit(RuntimeError):
    """Least-squares design matrix was rank deficient for the requested order."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(message)
        self.condition_number = condition_number


@dataclass(frozen=True)
class ExpSumKernel:
    """Kernel ``h(t) = sum_i a_i * exp(-b_i * t)``.

    Parameters
    ----------
    terms : tuple of (a_i, b_i) pairs
        Weights ``a_i`` (nonzero, mixed signs allowed) and decay rates
        ``b_i > 0``.  Structural constraints are enforced here; pointwise
        positivity of ``h`` is certified separately by
        :func:`validate_positive`.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("kernel needs at least one term")
        canon = []
        for pair in self.terms:
            if len(pair) != 2:
                raise ValueError(f"each term must be an (a, b) pair, got {pair!r}")
            a, b = float(pair[0]), float(pair[1])
            if not np.isfinite(a) or not np.isfinite(b):
                raise ValueError(f"non-finite term ({a}, {b})")
            if a == 0.0:
                raise ValueError("zero-weight terms are not allowed")
            if b <= 0.0:
                raise ValueError(f"decay rates must be positive, got {b}")
            canon.append((a, b))
        object.__setattr__(self, "terms", tuple(canon))

    @property
    def dim(self) -> int:
        """Number of exponential terms (state dimension of the process)."""
        return len(self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a for a, _ in self.terms])

    @property
    def decays(self) -> np.ndarray:
        return np.array([b for _, b in self.terms])

    def eval(self, t):
        """Evaluate ``h(t)`` for scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, b in self.terms:
            out = out + a * np.exp(-b * t)
        return out if out.ndim else float(out)

    __call__ = eval

    def l1_norm(self) -> float:
        """Total mass ``integral of h over [0, inf) = sum_i a_i / b_i``."""
        return float(sum(a / b for a, b in self.terms))

    def tail_integral(self, t):
        """``g(t) = integral of h over [t, inf) = sum_i (a_i/b_i) exp(-b_i t)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, b in self.terms:
            out = out + (a / b) * np.exp(-b * t)
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"terms": [[a, b] for a, b in self.terms]}

    @classmethod
    def from_dict(cls, record: dict) -> "ExpSumKernel":
        if set(record) != {"terms"}:
            raise ValueError(f"kernel record must have exactly the key 'terms', got {sorted(record)}")
        return cls(tuple((float(a), float(b)) for a, b in record["terms"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ExpSumKernel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class SampledKernel:
    """Kernel known only through samples ``h(t_k)`` on ``0 = t_0 < ... < t_m``.

    ``tail_negligible`` records whether the final sample is already ~0
    relative to the peak; fitting a kernel whose tail is still live is
    allowed but inaccurate, so :func:`fit_exp_sum` warns about it.
    """

    t: np.ndarray
    values: np.ndarray
    tail_negligible: bool = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape:
            raise ValueError("t and values must be 1-d arrays of equal length")
        if t.size < 2:
            raise ValueError("need at least two samples")
        if t[0] != 0.0:
            raise ValueError(f"first sample time must be 0, got {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        if np.any(v < 0):
            raise ValueError("sample values must be nonnegative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        peak = float(v.max())
        object.__setattr__(
            self, "tail_negligible", bool(peak == 0.0 or v[-1] <= 1e-3 * peak)
        )

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def to_csv(self, path) -> None:
        """Write the two-column (t, h) representation."""
        np.savetxt(path, np.column_stack([self.t, self.values]),
                   delimiter=",", header="t,h", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "SampledKernel":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"expected two columns (t, h), got {data.shape[1]}")
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class PositivityReport:
    """Outcome of a pointwise positivity check of ``h`` on a finite grid.

    ``ok`` is True when ``h > 0`` at every grid point; the certificate then
    carries the grid minimum.  Otherwise ``violation_t`` is the first grid
    time with ``h(t) <= 0``.
    """

    ok: bool
    n_grid: int
    grid_min: float
    argmin_t: float
    violation_t: float | None = None
    violation_value: float | None = None


def default_validation_grid(kernel: ExpSumKernel, n: int = 10_000) -> np.ndarray:
    """Log-spaced times covering all decay scales of ``kernel``, including 0.

    Spans from ``1e-6 / max(b)`` (well inside the fastest decay) to
    ``40 / min(b)`` (the slowest term down by ``e^-40``).
    """
    b = kernel.decays
    lo = 1e-6 / b.max()
    hi = 40.0 / b.min()
    grid = np.geomspace(lo, hi, n - 1)
    return np.concatenate([[0.0], grid])


def validate_positive(kernel: ExpSumKernel, grid: np.ndarray | None = None) -> PositivityReport:
    """Certify ``h > 0`` on a finite grid, or report the first violation.

    Mixed-sign weights are legitimate as long as the sum stays positive;
    this check is the gate a kernel must pass before it is meaningful as
    an excitation kernel.  A violation is returned, not raised.
    """
    if grid is None:
        grid = default_validation_grid(kernel)
    grid = np.asarray(grid, dtype=float)
    vals = kernel.eval(grid)
    k = int(np.argmin(vals))
    if vals[k] <= 0.0:
        first = int(np.argmax(vals <= 0.0))
        return PositivityReport(
            ok=False, n_grid=grid.size, grid_min=float(vals[k]), argmin_t=float(grid[k]),
            violation_t=float(grid[first]), violation_value=float(vals[first]),
        )
    return PositivityReport(ok=True, n_grid=grid.size, grid_min=float(vals[k]), argmin_t=float(grid[k]))


def geometric_decay_grid(count: int, b0: float, ratio: float) -> np.ndarray:
    """Decay-rate candidates ``{b0 * ratio**k, k = 0..count-1}``."""
    if count < 1:
        raise ValueError("need at least one decay rate")
    if b0 <= 0 or ratio <= 0:
        raise ValueError("b0 and ratio must be positive")
    return b0 * ratio ** np.arange(count)


@dataclass(frozen=True)
class ApproxError:
    """L1 (trapezoid on the sample grid) and Linf distance between kernels."""

    l1: float
    linf: float


def approx_error(sampled: SampledKernel, kernel: ExpSumKernel) -> ApproxError:
    """Error of ``kernel`` against the reference samples, on the sample grid."""
    diff = np.abs(sampled.values - kernel.eval(sampled.t))
    return ApproxError(l1=float(np.trapezoid(diff, sampled.t)), linf=float(diff.max()))


def fit_exp_sum(
    sampled: SampledKernel,
    order: int,
    decay_grid: np.ndarray | None = None,
) -> ExpSumKernel:
    """Approximate a sampled kernel by a positive sum of exponentials.

    Fits ``sqrt(h)`` by linear least squares against ``order`` exponential
    basis functions whose decay rates come from a fixed geometric grid,
    then squares the fit.  Squaring guarantees the approximant is
    nonnegative everywhere and yields a sum of exponentials again, with at
    most ``order * (order + 1) / 2`` distinct decay rates.

    Parameters
    ----------
    sampled : SampledKernel
        Reference samples; the tail at ``t_max`` should already be ~0.
    order : int
        Number of basis exponentials for the square-root fit, ``1 <= order
        <= len(samples)``.
    decay_grid : array, optional
        Decay-rate candidates for the square-root basis; the first
        ``order`` entries are used.  Default: geometric grid from
        ``0.5 / t_max`` up to 4.0 (see :func:`geometric_decay_grid`).

    Raises
    ------
    IllConditionedFit
        If the design matrix is rank deficient at the requested order
        (the condition number is attached to the exception).
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if order > sampled.t.size:
        raise ValueError(f"order {order} exceeds sample count {sampled.t.size}")
    if decay_grid is None:
        b0 = 0.5 / sampled.t_max
        if order == 1:
            rates = np.array([b0 * np.sqrt(4.0 / b0)])  # geometric mean of span
        else:
            ratio = (4.0 / b0) ** (1.0 / (order - 1))
            rates = geometric_decay_grid(order, b0, ratio)
    else:
        decay_grid = np.asarray(decay_grid, dtype=float)
        if decay_grid.size < order:
            raise ValueError(f"decay grid has {decay_grid.size} rates, need {order}")
        if np.any(decay_grid <= 0):
            raise ValueError("decay rates must be positive")
        rates = decay_grid[:order]

    if not sampled.tail_negligible:
        warnings.warn(
            "kernel tail at t_max is not negligible; the fit ignores mass beyond t_max",
            stacklevel=2,
        )

    design = np.exp(-np.outer(sampled.t, rates))
    target = np.sqrt(sampled.values)
    coef, _, rank, sv = np.linalg.lstsq(design, target, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if rank < order:
        raise IllConditionedFit(
            f"square-root fit is rank deficient ({rank} < {order}); "
            f"condition number {cond:.3e}; thin the decay grid or lower the order",
            condition_number=cond,
        )

    # (sum_j c_j e^{-r_j t})^2 -> terms (c_j c_l, r_j + r_l), merged by rate
    merged: dict[float, float] = {}
    for j in range(order):
        for l in range(j, order):
            weight = coef[j] * coef[l] * (1.0 if j == l else 2.0)
            rate = float(rates[j] + rates[l])
            merged[rate] = merged.get(rate, 0.0) + weight
    terms = sorted(((a, b) for b, a in merged.items() if a != 0.0), key=lambda p: p[1])
    if not terms:
        raise IllConditionedFit(
            "square-root fit collapsed to the zero function", condition_number=cond
        )
    # drop terms whose mass is numerically dead relative to the whole fit
    # (squaring a near-exact fit leaves ~eps^2 ghosts that would otherwise
    # inflate the state dimension downstream)
    total_mass = sum(abs(a) / b for a, b in terms)
    live = [(a, b) for a, b in terms if abs(a) / b > 1e-9 * total_mass]
    if live:
        terms = live
    return ExpSumKernel(tuple(terms))
