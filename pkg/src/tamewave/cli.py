"""Batch experiment runner binding all modules.

Subcommands: smoothing-audit, tame-audit, resonances, solve-linear,
solve-quasilinear, nash-moser, kg.  Configs are versioned TOML (schema = 1);
reports are CSV with 17-significant-digit floats plus JSON summaries, so
identical config + seed reproduce byte-identical outputs regardless of
--jobs.  Exit codes: 0 ok, 2 configuration/parse, 3 data, 4 domain, 5 solver,
6 convergence, 7 schedule, 70 unexpected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import nashmoser
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DataError,
    DomainError,
    ScheduleError,
    SolverError,
)
from .grid import Grid, load_field, make_grid, save_field
from .linsolve import (
    NonlinearTerm,
    ProblemSpec,
    constant_operator,
    pulse_forcing,
    solve_forward,
)
from .mellin import ModelOperatorSpec, find_resonances, mode_decay_rate, spectral_gap
from .reports import format_float
from .smoothing import SmoothingSchedule, audit_smoothing
from .tame import SmoothFunctionSpec, audit_tame

ENV_PREFIX = "TAMEWAVE_"

_EXIT_CODES = [
    (ConfigurationError, 2),
    (DataError, 3),
    (DomainError, 4),
    (SolverError, 5),
    (ConvergenceError, 6),
    (ScheduleError, 7),
]

_EPILOG = """exit codes:
  0  success
  2  configuration/parse error (bad config, bad grid, bad schedule parameters)
  3  data error (NaN/Inf fields, overflow, malformed binary fields)
  4  domain error (lower bounds, hyperbolicity, amplitude/trust region)
  5  solver error (CFL violation, conditioning, residual check)
  6  convergence error (divergence or iteration budget exhausted)
  7  schedule error (theta overflow)
 70  unexpected internal error

environment overrides (flags take precedence): TAMEWAVE_CONFIG, TAMEWAVE_OUT,
TAMEWAVE_SEED, TAMEWAVE_JOBS, TAMEWAVE_VERBOSE.
"""


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file {p} does not exist")
    try:
        with open(p, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config parse error in {p}: {exc}") from exc
    if cfg.get("schema") != 1:
        raise ConfigurationError(f"config {p} must declare schema = 1")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg or not isinstance(cfg[name], dict):
        raise ConfigurationError(f"config section [{name}] is missing")
    return cfg[name]


def _build_grid(cfg: dict) -> Grid:
    sec = _section(cfg, "grid")
    try:
        return make_grid(sec["n_t"], sec["n_y"], sec["t_max"])
    except KeyError as exc:
        raise ConfigurationError(f"[grid] section missing key {exc}") from exc


def _build_model(cfg: dict) -> ModelOperatorSpec:
    sec = _section(cfg, "model")
    return ModelOperatorSpec(
        gamma=sec.get("gamma", 0.5),
        c0=sec.get("c0", 1.0),
        mass=sec.get("mass", 0.0),
        extra_zeroth=sec.get("extra_zeroth", 0.0),
    )


def _build_forcing(cfg: dict, grid: Grid, base_dir: Path):
    sec = _section(cfg, "forcing")
    kind = sec.get("kind", "pulse")
    if kind == "zero":
        from .grid import zero_field
        return zero_field(grid)
    if kind == "pulse":
        try:
            return pulse_forcing(grid, sec["center"], sec["width"], sec["amplitude"],
                                 tuple(sec.get("y_profile", (1.0, 1.0))))
        except KeyError as exc:
            raise ConfigurationError(f"[forcing] pulse needs key {exc}") from exc
    if kind == "file":
        stem = sec.get("path")
        if stem is None:
            raise ConfigurationError("[forcing] kind='file' needs a path")
        f = load_field(base_dir / stem if not Path(stem).is_absolute() else stem)
        if f.grid != grid:
            raise ConfigurationError("forcing field grid does not match [grid] section")
        return f
    raise ConfigurationError(f"unknown forcing kind {kind!r}")


def _build_problem(cfg: dict, grid: Grid, model: ModelOperatorSpec, base_dir: Path,
                   require_mass: bool = False) -> ProblemSpec:
    if require_mass and model.mass <= 0.0:
        raise ConfigurationError("the kg subcommand requires [model] mass > 0")
    metric_sec = cfg.get("metric", {"kind": "polynomial", "coefficients": [0.5]})
    metric = SmoothFunctionSpec(
        metric_sec.get("kind", "polynomial"),
        coefficients=tuple(metric_sec.get("coefficients", (0.5,))),
    )
    terms = tuple(
        NonlinearTerm(t.get("coefficient", 1.0), t.get("power", 0), tuple(t.get("factors", ())))
        for t in cfg.get("nonlinearity", ())
    )
    analysis = cfg.get("analysis", {})
    return ProblemSpec(
        grid=grid,
        base=model,
        metric=metric,
        forcing=_build_forcing(cfg, grid, base_dir),
        nonlinearity=terms,
        metric_arg=metric_sec.get("arg", "u"),
        c_min=cfg.get("c_min", 0.1),
        expansion_alpha=analysis.get("alpha", 0.2),
        fit_window=tuple(analysis.get("fit_window", ())),
        rate_window=tuple(analysis.get("rate_window", ())),
    )


def _build_nm_config(cfg: dict) -> nashmoser.NashMoserConfig:
    sec = cfg.get("nashmoser", {})
    return nashmoser.NashMoserConfig(
        d=sec.get("d", 4),
        theta0=sec.get("theta0", 256.0),
        delta=sec.get("delta", 1.0),
        max_iters=sec.get("max_iters", 20),
        residual_tol=sec.get("residual_tol", 1e-8),
        s_cap=sec.get("s_cap", 8.0),
        band_cap=sec.get("band_cap", 32.0),
        smallness=sec.get("smallness", 1.0),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully parsed and validated quasilinear experiment."""

    grid: Grid
    model: ModelOperatorSpec
    problem: ProblemSpec
    nashmoser: nashmoser.NashMoserConfig
    out_dir: Path
    rng_seed: int

    @classmethod
    def parse(cls, cfg: dict, args, require_mass: bool = False) -> "ScenarioConfig":
        grid = _build_grid(cfg)
        model = _build_model(cfg)
        problem = _build_problem(cfg, grid, model, Path(args.config).parent,
                                 require_mass=require_mass)
        return cls(grid, model, problem, _build_nm_config(cfg), Path(args.out),
                   int(args.seed))


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _log(args, message):
    if args.verbose:
        print(message, file=sys.stderr)


# -- subcommand implementations ------------------------------------------------


def _cmd_resonances(cfg, args, out: Path) -> dict:
    model = _build_model(cfg)
    sec = cfg.get("resonances", {})
    rs = find_resonances(model, sec.get("k_max", 4), sec.get("search_bound", 2.0))
    sigma1, gap = spectral_gap(rs)
    rows = [[k, format_float(re), format_float(im)] for k, re, im in rs.table_rows()]
    _write_csv(out / "resonances.csv", ["k", "re_sigma", "im_sigma"], rows)
    summary = {
        "sigma1_re": sigma1.real,
        "sigma1_im": sigma1.imag,
        "gap": gap,
        "k_max": sec.get("k_max", 4),
    }
    _write_json(out / "summary.json", summary)
    return summary


def _cmd_smoothing_audit(cfg, args, out: Path) -> dict:
    grid = _build_grid(cfg)
    sec = _section(cfg, "audit")
    thetas = [float(x) for x in sec.get("thetas", (4, 8, 16, 32, 64, 128, 256))]
    samples = int(sec.get("samples", 50))
    schedule = SmoothingSchedule(theta0=sec.get("theta0", 256.0))
    cells = [(float(s), float(t)) for s in sec.get("s_values", (0, 1, 2, 3))
             for t in sec.get("t_values", (0, 1, 2, 3))]

    def run_cell(cell):
        s, t = cell
        seed_int = (args.seed * 1000003 + int(10 * s) * 1009 + int(10 * t)) % (2 ** 31)
        return cell, audit_smoothing(schedule, s, t, thetas, samples, seed_int, grid=grid)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(run_cell, cells))
    else:
        results = dict(run_cell(c) for c in cells)

    rows, summaries = [], []
    for cell in sorted(results):
        rep = results[cell]
        for descriptor, ratio in rep.ratios:
            fields = dict(part.split("=") for part in descriptor.split(";") if "=" in part)
            kind = descriptor.rsplit(";", 1)[-1]
            rows.append([format_float(cell[0]), format_float(cell[1]),
                         format_float(float(fields["theta"])), fields["sample"],
                         kind, format_float(ratio)])
        summaries.append(rep.summary())
    _write_csv(out / "smoothing_audit.csv",
               ["s", "t", "theta", "sample_id", "kind", "ratio"], rows)
    summary = {"cells": summaries, "thetas": thetas, "samples": samples}
    _write_json(out / "summary.json", summary)
    return summary


def _cmd_tame_audit(cfg, args, out: Path) -> dict:
    grid = _build_grid(cfg)
    sec = _section(cfg, "audit")
    ops = list(sec.get("ops", ("product", "reciprocal", "compose")))
    s = float(sec.get("s", 2.0))
    mu = float(sec.get("mu", 2.1))
    samples = int(sec.get("samples", 100))
    c0 = float(sec.get("c0", 0.5))

    def run_op(op):
        return op, audit_tame(op, s, mu, samples, args.seed, grid=grid, c0=c0)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(run_op, ops))
    else:
        results = dict(run_op(op) for op in ops)

    rows, summaries = [], []
    for op in sorted(results):
        rep = results[op]
        for descriptor, ratio in rep.ratios:
            rows.append([op, descriptor, format_float(ratio)])
        summaries.append(rep.summary())
    _write_csv(out / "tame_audit.csv", ["op", "descriptor", "ratio"], rows)
    summary = {"ops": summaries, "s": s, "mu": mu, "samples": samples}
    _write_json(out / "summary.json", summary)
    return summary


def _cmd_solve_linear(cfg, args, out: Path) -> dict:
    grid = _build_grid(cfg)
    model = _build_model(cfg)
    forcing = _build_forcing(cfg, grid, Path(args.config).parent)
    L = constant_operator(model, grid, cfg.get("c_min", 0.1))
    u = solve_forward(L, forcing)
    save_field(u, out / "solution")
    analysis = cfg.get("analysis", {})
    window = tuple(analysis.get("window", (0.25 * grid.t_max, 0.8 * grid.t_max)))
    k_rates = [int(k) for k in analysis.get("k_rates", (0, 1, 2))]
    rs = find_resonances(model, max(k_rates), model.gamma + 1.0)
    rows, rates = [], {}
    for k in k_rates:
        measured = mode_decay_rate(u, k, window, model)
        sigmas = [sig for sig in rs.modes[k] if sig.imag < -1e-12] or list(rs.modes[k])
        predicted = -max(sig.imag for sig in sigmas)
        rows.append([k, format_float(measured), format_float(predicted),
                     format_float(abs(measured - predicted) / predicted)])
        rates[str(k)] = {"measured": measured, "predicted": predicted}
    _write_csv(out / "decay_rates.csv",
               ["k", "measured_rate", "resonance_rate", "relative_error"], rows)
    summary = {"rates": rates, "window": list(window)}
    _write_json(out / "summary.json", summary)
    return summary


def _cmd_quasilinear(cfg, args, out: Path, require_mass: bool = False,
                     save_solution: bool = True) -> dict:
    scenario = ScenarioConfig.parse(cfg, args, require_mass=require_mass)
    try:
        result = nashmoser.run(scenario.problem, scenario.nashmoser)
    except (ConvergenceError, DomainError) as exc:
        trace = getattr(exc, "trace", None)
        if trace is not None:
            _write_csv(out / "trace.csv", trace.csv_header(),
                       ([_fmt_cell(c) for c in row] for row in trace.csv_rows()))
        raise
    _write_csv(out / "trace.csv", result.trace.csv_header(),
               ([_fmt_cell(c) for c in row] for row in result.trace.csv_rows()))
    if save_solution:
        save_field(result.u, out / "solution")
    report = {
        "converged": result.converged,
        "iterations": result.iterations,
        "constant_re": result.constant.real,
        "constant_im": result.constant.imag,
        "leading_re": result.leading_coefficient.real,
        "leading_im": result.leading_coefficient.imag,
        "leading_sigma_im": result.leading_sigma.imag,
        "decay_rate": result.decay_rate,
        "final_residual": result.trace.residuals[-1],
    }
    _write_json(out / "report.json", report)
    return report


def _fmt_cell(c):
    if isinstance(c, float):
        return format_float(c)
    return str(c)


_COMMANDS = {
    "resonances": _cmd_resonances,
    "smoothing-audit": _cmd_smoothing_audit,
    "tame-audit": _cmd_tame_audit,
    "solve-linear": _cmd_solve_linear,
    "solve-quasilinear": lambda cfg, args, out: _cmd_quasilinear(cfg, args, out),
    "nash-moser": lambda cfg, args, out: _cmd_quasilinear(cfg, args, out, save_solution=False),
    "kg": lambda cfg, args, out: _cmd_quasilinear(cfg, args, out, require_mass=True),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tamewave",
        description=__doc__.splitlines()[0],
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=_env("CONFIG") is None, default=_env("CONFIG"))
        p.add_argument("--out", default=_env("OUT", "out"))
        p.add_argument("--seed", type=int, default=int(_env("SEED", "0")))
        p.add_argument("--jobs", type=int, default=int(_env("JOBS", "1")))
        p.add_argument("--verbose", action="store_true",
                       default=_env("VERBOSE", "") not in ("", "0"))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        np.random.seed(args.seed % (2 ** 31))  # legacy consumers; library uses Generator
        summary = _COMMANDS[args.command](cfg, args, out)
        _log(args, f"{args.command}: ok -> {out}")
        if args.verbose:
            print(json.dumps(summary, indent=2, sort_keys=True, default=str), file=sys.stderr)
        return 0
    except Exception as exc:  # noqa: BLE001 - boundary: map to exit codes
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                print(f"tamewave: {klass.__name__}: {exc}", file=sys.stderr)
                return code
        print(f"tamewave: unexpected error: {exc!r}", file=sys.stderr)
        return 70


if __name__ == "__main__":
    sys.exit(main())
