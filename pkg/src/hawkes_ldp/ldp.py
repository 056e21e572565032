"""Curve containers, Legendre-Fenchel transforms, and convergence experiments.

The long-run cumulant scaling ``gamma(theta)`` and the large-deviation
rate function ``I(x) = sup_theta (theta x - gamma(theta))`` are convex
conjugates; this module houses the sampled-curve containers for both,
the transform between them (pointwise sup over samples plus a local
quadratic refinement), convexity diagnostics, and the experiment that
tracks how the cumulant scaling of a general decaying kernel is
approached by its exponential-sum approximations.

Transforms operate on bounded grids only: whenever the sup is attained
at a grid endpoint the output point is flagged ``truncated`` so an
infinite tail is never silently read as a finite value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import ExpSumKernel, SampledKernel, approx_error, fit_exp_sum
from .spectral import gamma_spectral

__all__ = [
    "ScgfCurve",
    "RateCurve",
    "ConvexityReport",
    "ConvergenceReport",
    "legendre",
    "convexity_check",
    "gamma_convergence_experiment",
]

_ZERO_TILT_TOL = 1e-3  # the cumulant scaling must vanish at zero tilt


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array")
    return arr


def _require_strictly_increasing(arr: np.ndarray, name: str):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} must be strictly increasing")


@dataclass(frozen=True, eq=False)
class ScgfCurve:
    """Sampled cumulant-scaling curve.

    ``values`` may contain ``+inf`` (tilt beyond the finite range) and
    ``nan`` (estimator refused at that tilt); ``errors`` are one-sigma
    bars, zero for exact sources.  ``ess``, ``horizon``, ``replicas``
    carry Monte Carlo provenance when applicable.
    """

    thetas: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    sources: tuple[str, ...]
    ess: np.ndarray | None = None
    horizon: float | None = None
    replicas: int | None = None

    def __post_init__(self):
        thetas = _as_float_array(self.thetas, "thetas")
        values = np.asarray(self.values, dtype=float)
        errors = np.asarray(self.errors, dtype=float)
        _require_strictly_increasing(thetas, "thetas")
        if values.shape != thetas.shape or errors.shape != thetas.shape:
            raise ValueError("thetas, values and errors must have matching shapes")
        if len(self.sources) != thetas.size:
            raise ValueError("need one source tag per point")
        if np.any(values == -math.inf):
            raise ValueError("-inf is not a valid curve value")
        finite = np.isfinite(values)
        if np.any(errors[finite] < 0) or not np.all(np.isfinite(errors[finite])):
            raise ValueError("error bars must be finite and nonnegative where values are finite")
        at_zero = np.flatnonzero(thetas == 0.0)
        for k in at_zero:
            allowance = max(_ZERO_TILT_TOL, 3.0 * errors[k]) if finite[k] else math.inf
            if finite[k] and abs(values[k]) > allowance:
                raise ValueError(
                    f"curve value at zero tilt is {values[k]}, beyond the allowance {allowance}"
                )
        ess = self.ess
        if ess is not None:
            ess = np.asarray(ess, dtype=float)
            if ess.shape != thetas.shape:
                raise ValueError("ess must match thetas in shape")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "errors", errors)
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "ess", ess)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "estimate", "se", "ess", "horizon", "replicas", "source"])
            ess = self.ess if self.ess is not None else np.full(self.thetas.size, math.nan)
            T = math.nan if self.horizon is None else self.horizon
            R = "" if self.replicas is None else self.replicas
            for k in range(self.thetas.size):
                w.writerow([
                    f"{self.thetas[k]:.17g}", f"{self.values[k]:.17g}",
                    f"{self.errors[k]:.17g}", f"{ess[k]:.17g}",
                    f"{T:.17g}", R, self.sources[k],
                ])

    @classmethod
    def from_csv(cls, path) -> "ScgfCurve":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:4] != ["theta", "estimate", "se", "ess"]:
            raise ValueError(f"{path} is not a cumulant-curve CSV")
        body = rows[1:]
        thetas = np.array([float(r[0]) for r in body])
        values = np.array([float(r[1]) for r in body])
        errors = np.array([float(r[2]) for r in body])
        ess = np.array([float(r[3]) for r in body])
        horizon = float(body[0][4]) if body else math.nan
        replicas = int(body[0][5]) if body and body[0][5] else None
        sources = tuple(r[6] for r in body)
        return cls(
            thetas=thetas, values=values, errors=errors, sources=sources,
            ess=None if np.all(np.isnan(ess)) else ess,
            horizon=None if math.isnan(horizon) else horizon,
            replicas=replicas,
        )


@dataclass(frozen=True, eq=False)
class RateCurve:
    """Sampled rate-function curve ``x -> I(x)``.

    ``truncated[k]`` marks points where the conjugating sup hit the tilt
    grid's boundary, i.e. the true value may be larger (possibly
    infinite) and only a lower bound is recorded.
    """

    xs: np.ndarray
    values: np.ndarray
    truncated: np.ndarray
    sources: tuple[str, ...]

    def __post_init__(self):
        xs = _as_float_array(self.xs, "xs")
        values = np.asarray(self.values, dtype=float)
        truncated = np.asarray(self.truncated, dtype=bool)
        _require_strictly_increasing(xs, "xs")
        if values.shape != xs.shape or truncated.shape != xs.shape:
            raise ValueError("xs, values and truncated must have matching shapes")
        if len(self.sources) != xs.size:
            raise ValueError("need one source tag per point")
        finite = np.isfinite(values)
        if np.any(values[finite] < -1e-9):
            raise ValueError("rate function values must be nonnegative")
        values = values.copy()
        values[finite] = np.maximum(values[finite], 0.0)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "truncated", truncated)
        object.__setattr__(self, "sources", tuple(self.sources))

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value", "truncated", "source"])
            for k in range(self.xs.size):
                w.writerow([
                    f"{self.xs[k]:.17g}", f"{self.values[k]:.17g}",
                    int(self.truncated[k]), self.sources[k],
                ])

    @classmethod
    def from_csv(cls, path) -> "RateCurve":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:2] != ["x", "value"]:
            raise ValueError(f"{path} is not a rate-curve CSV")
        body = rows[1:]
        return cls(
            xs=np.array([float(r[0]) for r in body]),
            values=np.array([float(r[1]) for r in body]),
            truncated=np.array([bool(int(r[2])) for r in body]),
            sources=tuple(r[3] for r in body),
        )


def _curve_samples(curve) -> tuple[np.ndarray, np.ndarray]:
    """Finite (abscissa, ordinate) samples of either curve type."""
    if isinstance(curve, ScgfCurve):
        xs, ys = curve.thetas, curve.values
    elif isinstance(curve, RateCurve):
        xs, ys = curve.xs, curve.values
    else:
        raise TypeError(f"expected ScgfCurve or RateCurve, got {type(curve).__name__}")
    mask = np.isfinite(ys)
    return xs[mask], ys[mask]


@dataclass(frozen=True)
class ConvexityReport:
    """Minimum divided second difference of a sampled curve and where it sits."""

    ok: bool
    min_curvature: float
    argmin_index: int
    location: float
    tolerance: float


def convexity_check(curve, tol: float = 1e-9) -> ConvexityReport:
    """Divided-difference convexity diagnostic on the finite samples.

    ``ok`` means the smallest second difference is above ``-tol``.  The
    reported index/location identify the middle point of the worst
    triple.  Fewer than three finite points is an error.
    """
    xs, ys = _curve_samples(curve)
    if xs.size < 3:
        raise ValueError(f"convexity needs at least 3 finite points, got {xs.size}")
    s_left = (ys[1:-1] - ys[:-2]) / (xs[1:-1] - xs[:-2])
    s_right = (ys[2:] - ys[1:-1]) / (xs[2:] - xs[1:-1])
    curv = 2.0 * (s_right - s_left) / (xs[2:] - xs[:-2])
    k = int(np.argmin(curv))
    return ConvexityReport(
        ok=bool(curv[k] >= -tol),
        min_curvature=float(curv[k]),
        argmin_index=k + 1,
        location=float(xs[k + 1]),
        tolerance=tol,
    )


def _conjugate(xs: np.ndarray, ys: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise ``sup_i (p x_i - y_i)`` over samples, refined by a local parabola.

    Returns values and a boolean mask marking grid points whose argmax
    fell on the sample boundary (domain truncation).
    """
    values = np.empty(grid.size)
    truncated = np.zeros(grid.size, dtype=bool)
    for j, p in enumerate(grid):
        vals = p * xs - ys
        k = int(np.argmax(vals))
        best = vals[k]
        if k == 0 or k == xs.size - 1:
            truncated[j] = True
        else:
            x1, x2, x3 = xs[k - 1], xs[k], xs[k + 1]
            y1, y2, y3 = vals[k - 1], vals[k], vals[k + 1]
            d1 = (y2 - y1) / (x2 - x1)
            c = ((y3 - y2) / (x3 - x2) - d1) / (x3 - x1)
            if c < 0.0:
                vertex = 0.5 * (x1 + x2) - d1 / (2.0 * c)
                vertex = min(max(vertex, x1), x3)
                refined = y1 + d1 * (vertex - x1) + c * (vertex - x1) * (vertex - x2)
                best = max(best, refined)
        values[j] = best
    return values, truncated


def legendre(curve, grid, convexity_tol: float = 1e-8):
    """Legendre-Fenchel transform of a sampled curve onto ``grid``.

    A cumulant curve transforms to a rate curve and vice versa.  The
    input must be convex within ``convexity_tol`` (divided second
    differences above ``-convexity_tol``); the sup is taken over the
    finite samples and refined with a parabola through the argmax and
    its neighbors.  Grid points whose sup lands on the first or last
    sample are flagged truncated: there the result is only the bounded-
    domain value, not the full conjugate.
    """
    report = convexity_check(curve, tol=convexity_tol)
    if not report.ok:
        raise ValueError(
            f"input curve is not convex within {convexity_tol}: second difference "
            f"{report.min_curvature:.3e} at abscissa {report.location}"
        )
    grid = _as_float_array(grid, "grid")
    _require_strictly_increasing(grid, "grid")
    xs, ys = _curve_samples(curve)
    values, truncated = _conjugate(xs, ys, grid)
    if isinstance(curve, ScgfCurve):
        # the sampled sup under-estimates a nonnegative function, so tiny
        # negatives near the minimum are grid artifacts; flooring at zero
        # only tightens the estimate
        tags = tuple("legendre" for _ in range(grid.size))
        return RateCurve(
            xs=grid, values=np.maximum(values, 0.0), truncated=truncated, sources=tags
        )
    # the cumulant container has no truncation column, so boundary hits are
    # flagged in the per-point source tag instead
    tags = tuple(
        "legendre:truncated" if truncated[j] else "legendre" for j in range(grid.size)
    )
    return ScgfCurve(
        thetas=grid, values=values, errors=np.zeros(grid.size), sources=tags
    )


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Cumulant scalings of successive exponential-sum approximations.

    Row ``i`` describes the order-``orders[i]`` fit: its term count, its
    L1 distance to the target kernel, the route used for the cumulant
    scaling, and one value per requested tilt (``nan`` where the
    estimator refused).  ``kernel_gaps``/``gamma_gaps`` compare
    successive rows; ``theta_lipschitz`` is the max slope of each row's
    tilt profile.
    """

    orders: tuple[int, ...]
    thetas: tuple[float, ...]
    gammas: np.ndarray  # shape (len(orders), len(thetas))
    routes: tuple[str, ...]
    n_terms: tuple[int, ...]
    fit_l1: tuple[float, ...]
    kernel_gaps: tuple[float, ...]  # L1 distance between successive fits
    gamma_gaps: np.ndarray  # shape (len(orders)-1, len(thetas))
    theta_lipschitz: tuple[float, ...]
    manifest: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["order", "n_terms", "fit_l1", "route", "theta", "gamma"])
            for i, order in enumerate(self.orders):
                for j, theta in enumerate(self.thetas):
                    w.writerow([
                        order, self.n_terms[i], f"{self.fit_l1[i]:.17g}",
                        self.routes[i], f"{theta:.17g}", f"{self.gammas[i, j]:.17g}",
                    ])


def gamma_convergence_experiment(
    target: SampledKernel,
    rate,
    thetas,
    orders,
    horizon: float = 25.0,
    replicas: int = 20_000,
    seed: int = 0,
    spectral_tol: float = 1e-4,
    decay_grid=None,
) -> ConvergenceReport:
    """Fit the target kernel at increasing orders and track the cumulant scaling.

    Each order is fitted with ``fit_exp_sum`` (fit failures propagate).
    Single-term fits use the spectral route; multi-term fits use the
    Monte Carlo route with the same master seed at every order, so the
    same underlying randomness drives all rows and differences between
    rows reflect the kernels rather than the noise.  Refused estimates
    appear as ``nan``.
    """
    from .mc_scgf import EssCollapse, scgf_curve, scgf_mc  # local: avoids import cycle

    orders = tuple(int(n) for n in orders)
    theta_arr = _as_float_array(thetas, "thetas")
    _require_strictly_increasing(theta_arr, "thetas")
    if len(orders) < 2:
        raise ValueError("need at least two orders to compare")

    fits: list[ExpSumKernel] = []
    routes, n_terms, fit_l1 = [], [], []
    gammas = np.full((len(orders), theta_arr.size), math.nan)
    theta_lip = []
    for i, order in enumerate(orders):
        fitted = fit_exp_sum(target, order, decay_grid=decay_grid)
        fits.append(fitted)
        n_terms.append(fitted.dim)
        fit_l1.append(approx_error(target, fitted).l1)
        if fitted.dim == 1:
            routes.append("spectral")
            for j, theta in enumerate(theta_arr):
                gammas[i, j] = gamma_spectral(fitted, rate, float(theta), tol=spectral_tol).gamma
        else:
            routes.append("mc")
            if theta_arr.size > 1:
                curve = scgf_curve(fitted, rate, theta_arr, horizon, replicas, seed)
                gammas[i] = curve.values
            else:
                try:
                    est = scgf_mc(fitted, rate, float(theta_arr[0]), horizon, replicas, seed)
                    gammas[i, 0] = est.estimate
                except EssCollapse:
                    pass
        row = gammas[i]
        good = np.isfinite(row)
        if np.count_nonzero(good) >= 2:
            slopes = np.abs(np.diff(row[good]) / np.diff(theta_arr[good]))
            theta_lip.append(float(slopes.max()))
        else:
            theta_lip.append(math.nan)

    kernel_gaps = tuple(
        float(np.trapezoid(np.abs(fits[i + 1].eval(target.t) - fits[i].eval(target.t)), target.t))
        for i in range(len(fits) - 1)
    )
    gamma_gaps = np.abs(np.diff(gammas, axis=0))
    manifest = {
        "horizon": horizon,
        "replicas": replicas,
        "seed": seed,
        "orders": list(orders),
        "thetas": [float(t) for t in theta_arr],
        "target_points": int(target.t.size),
    }
    return ConvergenceReport(
        orders=orders,
        thetas=tuple(float(t) for t in theta_arr),
        gammas=gammas,
        routes=tuple(routes),
        n_terms=tuple(n_terms),
        fit_l1=tuple(float(e) for e in fit_l1),
        kernel_gaps=kernel_gaps,
        gamma_gaps=gamma_gaps,
        theta_lipschitz=tuple(theta_lip),
        manifest=manifest,
    )
