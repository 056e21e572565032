"""Command-line frontend: configuration, dispatch, reproducible outputs.

Every run resolves its configuration from three layers — built-in defaults,
an optional TOML config file, then command-line flags (flags win) — and the
fully resolved configuration is echoed into a ``manifest.json`` next to the
outputs, together with a SHA-256 content hash of every file written and the
library versions used.  Nothing time- or host-dependent goes into an output
file, so the same configuration and seed always reproduce the same bytes.

Validation gathers *all* violations before reporting, and every failure path
emits a one-line machine-readable JSON record on stderr:

* exit 0 — success
* exit 1 — ``verify`` ran and at least one criterion failed
* exit 2 — configuration or usage error
* exit 3 — a typed runtime refusal (weight collapse, unsafe tilt,
  supercritical tilt, non-convergence, ill-conditioned fit, bad input file)
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import __version__, acceptance
from .kernels import ExpSumKernel, IllConditionedFit, SampledKernel, fit_exp_sum
from .ldp import RateCurve, ScgfCurve, gamma_convergence_experiment, legendre
from .linear_ldp import LinearModel, SupercriticalTilt, gamma_linear, rate_linear
from .mc_scgf import EssCollapse, UnsafeTilt, scgf_curve
from .rates import AffineCapRate, LinearRate, LogPowerRate, rate_to_dict
from .simulator import ThinningBoundError, simulate_path, write_events_binary
from .spectral import PowerIterationError, gamma_spectral

__all__ = ["ConfigError", "RunConfig", "main", "run"]

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_REFUSED = 3

_COMMANDS = (
    "sim",
    "scgf-mc",
    "scgf-spectral",
    "linear-gamma",
    "rate-curve",
    "fit-kernel",
    "verify",
    "converge",
)

# keys a config file may set, per command (beyond the common keys)
_COMMON_KEYS = frozenset({"seed", "output_dir", "format", "threads"})
_COMMAND_KEYS = {
    "sim": frozenset({"kernel", "rate", "horizon", "paths", "binary"}),
    "scgf-mc": frozenset({"kernel", "rate", "thetas", "horizon", "replicas"}),
    "scgf-spectral": frozenset({"kernel", "rate", "thetas", "tol", "max_refinements"}),
    "linear-gamma": frozenset({"nu", "mu", "thetas"}),
    "rate-curve": frozenset({"nu", "mu", "scgf_csv", "x_min", "x_max", "x_count"}),
    "fit-kernel": frozenset({"input", "order", "decay_grid"}),
    "verify": frozenset({"suite"}),
    "converge": frozenset(
        {
            "target", "rate", "orders", "thetas", "horizon", "replicas",
            "spectral_tol", "decay_grid",
        }
    ),
}
_NEEDS_OUTPUT_DIR = frozenset(
    {"sim", "scgf-mc", "scgf-spectral", "rate-curve", "fit-kernel", "converge"}
)

_REFUSALS = (
    EssCollapse,
    UnsafeTilt,
    SupercriticalTilt,
    PowerIterationError,
    IllConditionedFit,
    ThinningBoundError,
)


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class _Parser(argparse.ArgumentParser):
    """argparse variant that funnels usage errors into :class:`ConfigError`."""

    def error(self, message):
        raise ConfigError([message])


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description.

    ``params`` holds the typed command-specific values (kernels and rates as
    objects, grids as floats); ``echo`` is the JSON-safe rendering of the
    effective configuration that goes into the manifest.  The output
    directory is deliberately excluded from ``echo`` so that the same
    scientific configuration written to two locations produces identical
    manifest bytes.
    """

    command: str
    params: dict
    seed: int
    output_dir: Path | None
    out_format: str
    threads: int
    echo: dict


# ---------------------------------------------------------------------------
# value parsing and validation


def _parse_kernel(value, errs) -> ExpSumKernel | None:
    """``"0.5:1.0,0.3:2.0"`` or a TOML list of [weight, decay] pairs."""
    try:
        if isinstance(value, str):
            terms = []
            for part in value.split(","):
                a, _, b = part.partition(":")
                terms.append((float(a), float(b)))
        else:
            terms = [(float(a), float(b)) for a, b in value]
        return ExpSumKernel(tuple(terms))
    except (ValueError, TypeError) as exc:
        errs.append(f"kernel: cannot parse {value!r} ({exc})")
        return None


def _parse_rate(value, errs):
    """``"linear:nu,beta"``, ``"logpower:c,beta"`` or ``"affinecap:nu,beta,cap"``."""
    families = {"linear": LinearRate, "logpower": LogPowerRate, "affinecap": AffineCapRate}
    try:
        if not isinstance(value, str):
            raise ValueError("expected a string")
        name, _, rest = value.partition(":")
        cls = families[name.strip().lower()]
        return cls(*(float(x) for x in rest.split(",")))
    except KeyError:
        errs.append(f"rate: unknown family in {value!r}; choose from {sorted(families)}")
    except (ValueError, TypeError) as exc:
        errs.append(f"rate: cannot parse {value!r} ({exc})")
    return None


def _float_list(value, key, errs, strictly_increasing=True):
    try:
        out = [float(v) for v in (value if isinstance(value, (list, tuple)) else [value])]
    except (TypeError, ValueError):
        errs.append(f"{key}: expected a list of numbers, got {value!r}")
        return None
    if not out or not all(math.isfinite(v) for v in out):
        errs.append(f"{key}: values must be finite and nonempty")
        return None
    if strictly_increasing and any(b <= a for a, b in zip(out, out[1:])):
        errs.append(f"{key}: values must be strictly increasing")
        return None
    return out


def _finite_float(value, key, errs, positive=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        errs.append(f"{key}: expected a number, got {value!r}")
        return None
    if not math.isfinite(v) or (positive and v <= 0):
        errs.append(f"{key}: must be a finite{' positive' if positive else ''} number, got {v!r}")
        return None
    return v


def _int_at_least(value, key, errs, floor):
    try:
        v = int(value)
        if v != float(value):
            raise ValueError
    except (TypeError, ValueError):
        errs.append(f"{key}: expected an integer, got {value!r}")
        return None
    if v < floor:
        errs.append(f"{key}: must be >= {floor}, got {v}")
        return None
    return v


def _require(effective, key, errs):
    if effective.get(key) is None:
        errs.append(f"{key}: required but not provided")
        return None
    return effective[key]


def _echo_value(value):
    if isinstance(value, ExpSumKernel):
        return [[a, b] for a, b in value.terms]
    if isinstance(value, (LinearRate, LogPowerRate, AffineCapRate)):
        return rate_to_dict(value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_echo_value(v) for v in value]
    return value


def _resolve_config(ns: argparse.Namespace) -> RunConfig:
    command = ns.command
    allowed = _COMMON_KEYS | _COMMAND_KEYS[command]
    errs: list[str] = []

    file_cfg: dict = {}
    if ns.config is not None:
        path = Path(ns.config)
        try:
            with open(path, "rb") as fh:
                file_cfg = tomllib.load(fh)
        except FileNotFoundError:
            errs.append(f"config: file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            errs.append(f"config: cannot parse {path}: {exc}")
        for key in sorted(set(file_cfg) - allowed):
            errs.append(f"config: unknown key {key!r} for command {command!r}")
        file_cfg = {k: v for k, v in file_cfg.items() if k in allowed}

    flag_cfg = {
        k: v
        for k, v in vars(ns).items()
        if k not in ("command", "config") and v is not None
    }
    effective = {**file_cfg, **flag_cfg}

    seed = _int_at_least(effective.get("seed", 0), "seed", errs, 0)
    out_format = effective.get("format", "csv")
    if out_format not in ("csv", "jsonl"):
        errs.append(f"format: must be 'csv' or 'jsonl', got {out_format!r}")
    threads = _int_at_least(effective.get("threads", 1), "threads", errs, 1)
    output_dir = effective.get("output_dir")
    if output_dir is not None:
        output_dir = Path(output_dir)
    elif command in _NEEDS_OUTPUT_DIR:
        errs.append("output_dir: required for this command")

    params: dict = {}

    def need_model():
        kernel_text = _require(effective, "kernel", errs)
        rate_text = _require(effective, "rate", errs)
        if kernel_text is not None:
            params["kernel"] = _parse_kernel(kernel_text, errs)
        if rate_text is not None:
            params["rate"] = _parse_rate(rate_text, errs)

    if command == "sim":
        need_model()
        if _require(effective, "horizon", errs) is not None:
            params["horizon"] = _finite_float(effective["horizon"], "horizon", errs, positive=True)
        params["paths"] = _int_at_least(effective.get("paths", 1), "paths", errs, 1)
        binary = effective.get("binary", False)
        if not isinstance(binary, bool):
            errs.append(f"binary: expected true/false, got {binary!r}")
        params["binary"] = bool(binary)
    elif command == "scgf-mc":
        need_model()
        if _require(effective, "thetas", errs) is not None:
            params["thetas"] = _float_list(effective["thetas"], "thetas", errs)
        if _require(effective, "horizon", errs) is not None:
            params["horizon"] = _finite_float(effective["horizon"], "horizon", errs, positive=True)
        params["replicas"] = _int_at_least(effective.get("replicas", 1000), "replicas", errs, 2)
    elif command == "scgf-spectral":
        need_model()
        if _require(effective, "thetas", errs) is not None:
            params["thetas"] = _float_list(effective["thetas"], "thetas", errs)
        params["tol"] = _finite_float(effective.get("tol", 1e-4), "tol", errs, positive=True)
        params["max_refinements"] = _int_at_least(
            effective.get("max_refinements", 6), "max_refinements", errs, 1
        )
    elif command == "linear-gamma":
        if _require(effective, "nu", errs) is not None:
            params["nu"] = _finite_float(effective["nu"], "nu", errs, positive=True)
        if _require(effective, "mu", errs) is not None:
            mu = _finite_float(effective["mu"], "mu", errs, positive=True)
            if mu is not None and mu >= 1.0:
                errs.append(f"mu: kernel mass must be < 1 for a stable model, got {mu}")
                mu = None
            params["mu"] = mu
        if _require(effective, "thetas", errs) is not None:
            params["thetas"] = _float_list(effective["thetas"], "thetas", errs)
    elif command == "rate-curve":
        have_linear = effective.get("nu") is not None or effective.get("mu") is not None
        have_csv = effective.get("scgf_csv") is not None
        if have_linear == have_csv:
            errs.append("model: provide either nu and mu, or scgf_csv (exactly one source)")
        if have_csv:
            params["scgf_csv"] = Path(effective["scgf_csv"])
        if have_linear:
            nu = _require(effective, "nu", errs)
            mu = _require(effective, "mu", errs)
            if nu is not None:
                params["nu"] = _finite_float(nu, "nu", errs, positive=True)
            if mu is not None:
                mu_v = _finite_float(mu, "mu", errs, positive=True)
                if mu_v is not None and mu_v >= 1.0:
                    errs.append(f"mu: kernel mass must be < 1 for a stable model, got {mu_v}")
                    mu_v = None
                params["mu"] = mu_v
        x_min = _finite_float(effective.get("x_min", 0.2), "x_min", errs)
        x_max = _finite_float(effective.get("x_max", 6.0), "x_max", errs)
        x_count = _int_at_least(effective.get("x_count", 59), "x_count", errs, 2)
        if x_min is not None and x_min < 0:
            errs.append(f"x_min: event rates are nonnegative, got {x_min}")
        if None not in (x_min, x_max) and x_min >= x_max:
            errs.append(f"x grid: x_min must be < x_max, got [{x_min}, {x_max}]")
        params.update(x_min=x_min, x_max=x_max, x_count=x_count)
    elif command == "fit-kernel":
        if _require(effective, "input", errs) is not None:
            params["input"] = Path(effective["input"])
        if _require(effective, "order", errs) is not None:
            params["order"] = _int_at_least(effective["order"], "order", errs, 1)
        if effective.get("decay_grid") is not None:
            grid = _float_list(effective["decay_grid"], "decay_grid", errs)
            if grid is not None and any(g <= 0 for g in grid):
                errs.append("decay_grid: decay rates must be positive")
                grid = None
            params["decay_grid"] = grid
        else:
            params["decay_grid"] = None
    elif command == "verify":
        suite = effective.get("suite", "all")
        if suite not in acceptance.SUITES:
            errs.append(f"suite: unknown suite {suite!r}; valid: {sorted(acceptance.SUITES)}")
        params["suite"] = suite
    elif command == "converge":
        if _require(effective, "target", errs) is not None:
            params["target"] = Path(effective["target"])
        rate_text = _require(effective, "rate", errs)
        if rate_text is not None:
            params["rate"] = _parse_rate(rate_text, errs)
        orders = _require(effective, "orders", errs)
        if orders is not None:
            orders = _float_list(orders, "orders", errs)
        if orders is not None:
            if any(o != int(o) or o < 1 for o in orders):
                errs.append("orders: must be positive integers")
            elif len(orders) < 2:
                errs.append("orders: need at least two approximation orders to compare")
            else:
                params["orders"] = tuple(int(o) for o in orders)
        if _require(effective, "thetas", errs) is not None:
            params["thetas"] = _float_list(effective["thetas"], "thetas", errs)
        params["horizon"] = _finite_float(
            effective.get("horizon", 25.0), "horizon", errs, positive=True
        )
        params["replicas"] = _int_at_least(effective.get("replicas", 20_000), "replicas", errs, 2)
        params["spectral_tol"] = _finite_float(
            effective.get("spectral_tol", 1e-4), "spectral_tol", errs, positive=True
        )
        if effective.get("decay_grid") is not None:
            grid = _float_list(effective["decay_grid"], "decay_grid", errs)
            if grid is not None and any(g <= 0 for g in grid):
                errs.append("decay_grid: decay rates must be positive")
                grid = None
            params["decay_grid"] = grid
        else:
            params["decay_grid"] = None

    if errs:
        raise ConfigError(errs)

    echo = {
        "command": command,
        "seed": seed,
        "format": out_format,
        "threads": threads,
        **{k: _echo_value(v) for k, v in sorted(params.items())},
    }
    return RunConfig(
        command=command, params=params, seed=seed, output_dir=output_dir,
        out_format=out_format, threads=threads, echo=echo,
    )


# ---------------------------------------------------------------------------
# output helpers


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(cfg: RunConfig, files: list[Path], result: dict | None = None) -> Path:
    manifest = {
        "config": cfg.echo,
        "outputs": {f.name: _sha256(f) for f in files},
        "versions": {
            "hawkes_ldp": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    if result is not None:
        manifest["result"] = result
    path = cfg.output_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if math.isnan(v) else v
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    return value


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)  # curve containers round-trip booleans as 0/1
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}"
    return value


def _write_table(path: Path, columns: list[str], rows, fmt: str) -> Path:
    """Write rows either as CSV (``%.17g`` floats) or as JSON lines."""
    if fmt == "csv":
        with open(path.with_suffix(".csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_csv_cell(v) for v in row])
        return path.with_suffix(".csv")
    with open(path.with_suffix(".jsonl"), "w") as fh:
        for row in rows:
            record = {c: _jsonable(v) for c, v in zip(columns, row)}
            fh.write(json.dumps(record, sort_keys=False) + "\n")
    return path.with_suffix(".jsonl")


def _scgf_rows(curve: ScgfCurve):
    ess = curve.ess if curve.ess is not None else [math.nan] * curve.thetas.size
    for theta, value, err, e, src in zip(
        curve.thetas, curve.values, curve.errors, ess, curve.sources
    ):
        yield (
            float(theta), float(value), float(err), float(e),
            float(curve.horizon) if curve.horizon is not None else math.nan,
            int(curve.replicas) if curve.replicas is not None else None,
            src,
        )


_SCGF_COLUMNS = ["theta", "estimate", "se", "ess", "horizon", "replicas", "source"]


def _emit_error(kind: str, message: str, code: int, violations: list[str] | None = None) -> int:
    record: dict = {"error": kind, "message": message}
    if violations is not None:
        record["violations"] = violations
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# command implementations


def _cmd_sim(cfg: RunConfig) -> int:
    kernel, rate = cfg.params["kernel"], cfg.params["rate"]
    horizon, n_paths = cfg.params["horizon"], cfg.params["paths"]
    rows, files, total = [], [], 0
    for replica in range(n_paths):
        sample = simulate_path(kernel, rate, horizon, seed=cfg.seed, replica=replica)
        total += sample.n_events
        rows.extend((replica, float(t)) for t in sample.times)
        if cfg.params["binary"]:
            out = cfg.output_dir / f"path_{replica:04d}.bin"
            write_events_binary(sample, out)
            files.append(out)
    files.insert(0, _write_table(cfg.output_dir / "events", ["path", "time"], rows, cfg.out_format))
    manifest = _write_manifest(cfg, files, result={"total_events": total, "paths": n_paths})
    print(f"wrote {total} events from {n_paths} path(s) to {files[0]} ({manifest})")
    return EXIT_OK


def _cmd_scgf_mc(cfg: RunConfig) -> int:
    curve = scgf_curve(
        cfg.params["kernel"], cfg.params["rate"], cfg.params["thetas"],
        horizon=cfg.params["horizon"], replicas=cfg.params["replicas"], seed=cfg.seed,
    )
    table = _write_table(cfg.output_dir / "curve", _SCGF_COLUMNS, _scgf_rows(curve), cfg.out_format)
    refused = [s for s in curve.sources if s != "mc"]
    manifest = _write_manifest(cfg, [table], result={"refused_points": len(refused)})
    print(f"wrote {curve.thetas.size} tilt(s) to {table} ({manifest})")
    return EXIT_OK


def _cmd_scgf_spectral(cfg: RunConfig) -> int:
    thetas = cfg.params["thetas"]
    values, errors, all_converged = [], [], True
    for theta in thetas:
        result = gamma_spectral(
            cfg.params["kernel"], cfg.params["rate"], theta,
            tol=cfg.params["tol"], max_refinements=cfg.params["max_refinements"],
        )
        values.append(result.gamma)
        trace = result.trace
        errors.append(abs(trace[-1].gamma - trace[-2].gamma) if len(trace) >= 2 else 0.0)
        all_converged &= result.converged
    curve = ScgfCurve(
        thetas=np.asarray(thetas), values=np.asarray(values),
        errors=np.asarray(errors), sources=("spectral",) * len(thetas),
    )
    table = _write_table(cfg.output_dir / "curve", _SCGF_COLUMNS, _scgf_rows(curve), cfg.out_format)
    manifest = _write_manifest(cfg, [table], result={"converged": all_converged})
    print(f"wrote {len(thetas)} tilt(s) to {table} ({manifest})")
    return EXIT_OK


def _cmd_linear_gamma(cfg: RunConfig) -> int:
    model = LinearModel(nu=cfg.params["nu"], mu=cfg.params["mu"])
    thetas = cfg.params["thetas"]
    values = [gamma_linear(theta, model) for theta in thetas]
    for value in values:
        print(f"{value:.17g}")
    if cfg.output_dir is not None:
        curve = ScgfCurve(
            thetas=np.asarray(thetas), values=np.asarray(values),
            errors=np.zeros(len(thetas)), sources=("closed-form",) * len(thetas),
        )
        table = _write_table(
            cfg.output_dir / "curve", _SCGF_COLUMNS, _scgf_rows(curve), cfg.out_format
        )
        _write_manifest(cfg, [table])
    return EXIT_OK


def _cmd_rate_curve(cfg: RunConfig) -> int:
    xs = np.linspace(cfg.params["x_min"], cfg.params["x_max"], cfg.params["x_count"])
    if "scgf_csv" in cfg.params:
        source_curve = ScgfCurve.from_csv(cfg.params["scgf_csv"])
        curve = legendre(source_curve, xs)
    else:
        model = LinearModel(nu=cfg.params["nu"], mu=cfg.params["mu"])
        curve = RateCurve(
            xs=xs, values=np.array([rate_linear(float(x), model) for x in xs]),
            truncated=np.zeros(xs.size, dtype=bool), sources=("closed-form",) * xs.size,
        )
    rows = (
        (float(x), float(v), bool(t), s)
        for x, v, t, s in zip(curve.xs, curve.values, curve.truncated, curve.sources)
    )
    table = _write_table(
        cfg.output_dir / "rate", ["x", "value", "truncated", "source"], rows, cfg.out_format
    )
    manifest = _write_manifest(
        cfg, [table], result={"truncated_points": int(np.sum(curve.truncated))}
    )
    print(f"wrote {xs.size} point(s) to {table} ({manifest})")
    return EXIT_OK


def _cmd_fit_kernel(cfg: RunConfig) -> int:
    sampled = SampledKernel.from_csv(cfg.params["input"])
    decay_grid = cfg.params["decay_grid"]
    fitted = fit_exp_sum(
        sampled, cfg.params["order"],
        decay_grid=np.asarray(decay_grid) if decay_grid is not None else None,
    )
    l1 = float(np.trapezoid(np.abs(fitted.eval(sampled.t) - sampled.values), sampled.t))
    rows = ((float(a), float(b)) for a, b in fitted.terms)
    table = _write_table(cfg.output_dir / "terms", ["weight", "decay"], rows, cfg.out_format)
    manifest = _write_manifest(
        cfg, [table],
        result={
            "l1_error": l1,
            "n_terms": len(fitted.terms),
            "tail_negligible": sampled.tail_negligible,
        },
    )
    print(f"fitted {len(fitted.terms)} term(s), L1 error {l1:.6g} ({manifest})")
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    results = acceptance.run_suite(cfg.params["suite"])
    for result in results:
        print(result.line())
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass} of {len(results)} criteria passed (suite={cfg.params['suite']})")
    if cfg.output_dir is not None:
        rows = ((r.number, r.name, r.status, r.detail) for r in results)
        table = _write_table(
            cfg.output_dir / "report", ["number", "name", "status", "detail"], rows,
            cfg.out_format,
        )
        _write_manifest(cfg, [table], result={"passed": n_pass, "total": len(results)})
    return EXIT_OK if n_pass == len(results) else EXIT_VERIFY_FAILED


def _cmd_converge(cfg: RunConfig) -> int:
    target = SampledKernel.from_csv(cfg.params["target"])
    decay_grid = cfg.params["decay_grid"]
    report = gamma_convergence_experiment(
        target, cfg.params["rate"], thetas=cfg.params["thetas"], orders=cfg.params["orders"],
        horizon=cfg.params["horizon"], replicas=cfg.params["replicas"], seed=cfg.seed,
        spectral_tol=cfg.params["spectral_tol"],
        decay_grid=np.asarray(decay_grid) if decay_grid is not None else None,
    )
    rows = (
        (order, report.n_terms[i], float(report.fit_l1[i]), report.routes[i],
         float(theta), float(report.gammas[i, j]))
        for i, order in enumerate(report.orders)
        for j, theta in enumerate(report.thetas)
    )
    table = _write_table(
        cfg.output_dir / "convergence",
        ["order", "n_terms", "fit_l1", "route", "theta", "gamma"], rows, cfg.out_format,
    )
    manifest = _write_manifest(
        cfg, [table],
        result={
            "experiment": report.manifest,
            "fit_l1": [float(v) for v in report.fit_l1],
            "kernel_gaps": [float(v) for v in report.kernel_gaps],
            "gamma_gaps": [[_jsonable(v) for v in row] for row in report.gamma_gaps],
        },
    )
    print(f"compared orders {report.orders} at {len(report.thetas)} tilt(s) ({manifest})")
    return EXIT_OK


_DISPATCH = {
    "sim": _cmd_sim,
    "scgf-mc": _cmd_scgf_mc,
    "scgf-spectral": _cmd_scgf_spectral,
    "linear-gamma": _cmd_linear_gamma,
    "rate-curve": _cmd_rate_curve,
    "fit-kernel": _cmd_fit_kernel,
    "verify": _cmd_verify,
    "converge": _cmd_converge,
}


# ---------------------------------------------------------------------------
# argument parser


def _add_common(sub: argparse.ArgumentParser, needs_dir: bool):
    sub.add_argument("--config", help="TOML config file; flags override its values")
    sub.add_argument("--seed", type=int, help="master seed (default 0)")
    sub.add_argument(
        "--output-dir", dest="output_dir",
        help="directory for outputs and manifest" + ("" if needs_dir else " (optional)"),
    )
    sub.add_argument("--format", help="table format: csv (default) or jsonl")
    sub.add_argument("--threads", type=int, help="worker cap, recorded in the manifest")


def _add_model(sub: argparse.ArgumentParser):
    sub.add_argument("--kernel", help="excitation kernel, 'weight:decay[,weight:decay...]'")
    sub.add_argument(
        "--rate", help="intensity map: 'linear:nu,beta' | 'logpower:c,beta' | 'affinecap:nu,beta,cap'"
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="hawkes-ldp",
        description="Large-deviation toolkit for self-exciting point processes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    sub = subs.add_parser("sim", help="simulate event paths by exact thinning")
    _add_model(sub)
    sub.add_argument("--horizon", type=float)
    sub.add_argument("--paths", type=int, help="number of independent paths")
    sub.add_argument(
        "--binary", action="store_const", const=True, default=None,
        help="also write one compact binary event file per path",
    )
    _add_common(sub, True)

    sub = subs.add_parser("scgf-mc", help="importance-weighted growth-rate estimates")
    _add_model(sub)
    sub.add_argument("--theta", dest="thetas", type=float, action="append", help="tilt (repeatable)")
    sub.add_argument("--horizon", type=float)
    sub.add_argument("--replicas", type=int)
    _add_common(sub, True)

    sub = subs.add_parser("scgf-spectral", help="tilted-generator eigenvalue estimates")
    _add_model(sub)
    sub.add_argument("--theta", dest="thetas", type=float, action="append", help="tilt (repeatable)")
    sub.add_argument("--tol", type=float, help="refinement tolerance")
    sub.add_argument("--max-refinements", dest="max_refinements", type=int)
    _add_common(sub, True)

    sub = subs.add_parser("linear-gamma", help="closed-form growth rate of the linear model")
    sub.add_argument("--nu", type=float, help="baseline intensity")
    sub.add_argument("--mu", type=float, help="kernel mass (must be < 1)")
    sub.add_argument("--theta", dest="thetas", type=float, action="append", help="tilt (repeatable)")
    _add_common(sub, False)

    sub = subs.add_parser("rate-curve", help="rate function on a grid of mean event rates")
    sub.add_argument("--nu", type=float, help="baseline intensity (closed-form route)")
    sub.add_argument("--mu", type=float, help="kernel mass (closed-form route)")
    sub.add_argument("--scgf-csv", dest="scgf_csv", help="transform a stored growth-rate curve")
    sub.add_argument("--x-min", dest="x_min", type=float)
    sub.add_argument("--x-max", dest="x_max", type=float)
    sub.add_argument("--x-count", dest="x_count", type=int)
    _add_common(sub, True)

    sub = subs.add_parser("fit-kernel", help="positive sum-of-exponentials fit of a sampled kernel")
    sub.add_argument("--input", help="CSV with columns t,h")
    sub.add_argument("--order", type=int, help="number of basis exponentials")
    sub.add_argument(
        "--decay-grid", dest="decay_grid", type=float, action="append",
        help="candidate decay rate (repeatable)",
    )
    _add_common(sub, True)

    sub = subs.add_parser("verify", help="run the shipped-guarantee checks")
    sub.add_argument("--suite", help=f"one of {sorted(acceptance.SUITES)} (default all)")
    _add_common(sub, False)

    sub = subs.add_parser("converge", help="kernel-approximation convergence experiment")
    sub.add_argument("--target", help="CSV with columns t,h (the kernel to approximate)")
    sub.add_argument(
        "--rate", help="intensity map: 'linear:nu,beta' | 'logpower:c,beta' | 'affinecap:nu,beta,cap'"
    )
    sub.add_argument("--order", dest="orders", type=int, action="append", help="fit order (repeatable)")
    sub.add_argument("--theta", dest="thetas", type=float, action="append", help="tilt (repeatable)")
    sub.add_argument("--horizon", type=float)
    sub.add_argument("--replicas", type=int)
    sub.add_argument("--spectral-tol", dest="spectral_tol", type=float)
    sub.add_argument(
        "--decay-grid", dest="decay_grid", type=float, action="append",
        help="candidate decay rate for the fits (repeatable)",
    )
    _add_common(sub, True)

    return parser


def run(argv=None) -> int:
    """Parse, validate, dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except ConfigError as exc:
        return _emit_error("usage", "invalid arguments", EXIT_CONFIG, exc.violations)
    if ns.command is None:
        return _emit_error(
            "usage", f"missing subcommand; expected one of {list(_COMMANDS)}", EXIT_CONFIG
        )
    try:
        cfg = _resolve_config(ns)
    except ConfigError as exc:
        return _emit_error(
            "config-validation",
            f"{len(exc.violations)} violation(s)", EXIT_CONFIG, exc.violations,
        )
    if cfg.output_dir is not None:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    try:
        return _DISPATCH[cfg.command](cfg)
    except _REFUSALS as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_REFUSED)
    except (OSError, ValueError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_REFUSED)


def main() -> None:  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
