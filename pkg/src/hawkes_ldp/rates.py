"""Event-rate maps from excitation level to intensity.

A rate map lambda(z) turns the accumulated excitation z into the current
event intensity.  All shipped families are nondecreasing and bounded away
from zero, which is what the simulator's rejection bound and the spectral
solver's irreducibility argument rely on.  Evaluation clamps z at 0: the
excitation state can dip negative when the kernel has inhibitory terms,
and the rate treats that as no excitation.

Families
--------
``LinearRate(nu, beta)``        lambda(z) = nu + beta z
``LogPowerRate(c, beta)``       lambda(z) = log(c + z) ** beta, c > 1
``AffineCapRate(nu, beta, cap)``lambda(z) = min(nu + beta z, cap)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinearRate",
    "LogPowerRate",
    "AffineCapRate",
    "SublinearityReport",
    "eval_rate",
    "sublinearity_report",
    "lipschitz_check",
    "rate_from_dict",
    "rate_to_dict",
    "rate_from_json",
    "rate_to_json",
]


@dataclass(frozen=True)
class LinearRate:
    """lambda(z) = nu + beta z with nu > 0, beta >= 0."""

    nu: float
    beta: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"baseline nu must be positive, got {self.nu}")
        if self.beta < 0:
            raise ValueError(f"slope beta must be nonnegative, got {self.beta}")

    @property
    def lower_bound(self) -> float:
        """Declared positive floor of the rate (attained at z = 0)."""
        return self.nu

    def eval(self, z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        out = self.nu + self.beta * z
        return out if out.ndim else float(out)

    __call__ = eval

    def _eval_scalar(self, z: float) -> float:
        # hot loop of the simulator; same clamp as eval, no array round trip
        return self.nu + self.beta * z if z > 0.0 else self.nu


@dataclass(frozen=True)
class LogPowerRate:
    """lambda(z) = log(c + z) ** beta with c > 1, beta > 0.

    Grows slower than any linear function, so the associated cumulant
    generating function stays finite for every tilt.
    """

    c: float
    beta: float

    def __post_init__(self):
        if self.c <= 1:
            raise ValueError(f"offset c must exceed 1, got {self.c}")
        if self.beta <= 0:
            raise ValueError(f"exponent beta must be positive, got {self.beta}")

    @property
    def lower_bound(self) -> float:
        return float(np.log(self.c) ** self.beta)

    def eval(self, z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        out = np.log(self.c + z) ** self.beta
        return out if out.ndim else float(out)

    __call__ = eval

    def _eval_scalar(self, z: float) -> float:
        return math.log(self.c + z) ** self.beta if z > 0.0 else math.log(self.c) ** self.beta


@dataclass(frozen=True)
class AffineCapRate:
    """lambda(z) = min(nu + beta z, cap): affine growth saturating at cap."""

    nu: float
    beta: float
    cap: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"baseline nu must be positive, got {self.nu}")
        if self.beta < 0:
            raise ValueError(f"slope beta must be nonnegative, got {self.beta}")
        if self.cap < self.nu:
            raise ValueError(f"cap {self.cap} is below the baseline {self.nu}")

    @property
    def lower_bound(self) -> float:
        return self.nu

    def eval(self, z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        out = np.minimum(self.nu + self.beta * z, self.cap)
        return out if out.ndim else float(out)

    __call__ = eval

    def _eval_scalar(self, z: float) -> float:
        return min(self.nu + self.beta * z, self.cap) if z > 0.0 else self.nu


RateFn = LinearRate | LogPowerRate | AffineCapRate

_FAMILIES = {
    "linear": (LinearRate, ("nu", "beta")),
    "log_power": (LogPowerRate, ("c", "beta")),
    "affine_cap": (AffineCapRate, ("nu", "beta", "cap")),
}


def eval_rate(rate, z):
    """Evaluate ``rate`` at ``max(z, 0)`` (scalar or array)."""
    return rate.eval(z)


@dataclass(frozen=True)
class SublinearityReport:
    """Tail diagnostics for lambda(z) / z.

    ``estimate`` approximates ``limsup lambda(z)/z``: the ratio at ``z_max``
    when the ratio is nonincreasing over the tail grid, otherwise the
    worst (largest) tail-grid ratio.  ``max_over_tail`` is always the
    largest ratio seen on the grid.
    """

    estimate: float
    max_over_tail: float
    ratio_nonincreasing: bool
    z_max: float


def sublinearity_report(rate, z_max: float, n_grid: int = 200) -> SublinearityReport:
    """Probe lambda(z)/z on a log-spaced tail grid ending at ``z_max``.

    The grid spans the last two decades below ``z_max`` — far enough out
    that transient behaviour near the origin does not contaminate the
    tail-slope estimate.
    """
    if z_max <= 0:
        raise ValueError("z_max must be positive")
    grid = np.geomspace(z_max / 100.0, z_max, n_grid)
    ratios = rate.eval(grid) / grid
    nonincreasing = bool(np.all(np.diff(ratios) <= 1e-12 * np.abs(ratios[:-1]) + 1e-300))
    estimate = float(ratios[-1]) if nonincreasing else float(ratios.max())
    return SublinearityReport(
        estimate=estimate,
        max_over_tail=float(ratios.max()),
        ratio_nonincreasing=nonincreasing,
        z_max=float(z_max),
    )


def lipschitz_check(rate, alpha: float, grid: np.ndarray | None = None) -> float:
    """Largest finite-difference slope of ``lambda(z) ** alpha`` on ``grid``.

    A finite value certifies a Lipschitz bound for the alpha-th power of
    the rate over the probed range.  Default grid: 20001 uniform points on
    [0, 50].
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if grid is None:
        grid = np.linspace(0.0, 50.0, 20_001)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    powered = rate.eval(grid) ** alpha
    slopes = np.abs(np.diff(powered)) / np.diff(grid)
    return float(slopes.max())


def rate_to_dict(rate) -> dict:
    for name, (cls, fields) in _FAMILIES.items():
        if isinstance(rate, cls):
            record = {"family": name}
            record.update({f: getattr(rate, f) for f in fields})
            return record
    raise TypeError(f"unknown rate family {type(rate).__name__}")


def rate_from_dict(record: dict):
    if "family" not in record:
        raise ValueError("rate record must carry a 'family' key")
    family = record["family"]
    if family not in _FAMILIES:
        raise ValueError(f"unknown rate family {family!r}; known: {sorted(_FAMILIES)}")
    cls, fields = _FAMILIES[family]
    extra = set(record) - {"family", *fields}
    if extra:
        raise ValueError(f"unknown keys for family {family!r}: {sorted(extra)}")
    missing = set(fields) - set(record)
    if missing:
        raise ValueError(f"missing keys for family {family!r}: {sorted(missing)}")
    return cls(**{f: float(record[f]) for f in fields})


def rate_to_json(rate) -> str:
    return json.dumps(rate_to_dict(rate))


def rate_from_json(text: str):
    return rate_from_dict(json.loads(text))
