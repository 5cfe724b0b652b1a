"""Experiment runner: TOML documents in, CSV + JSON summary out.

Document layout::

    kind = "tangent_lyapunov"
    output_dir = "out/harmonic"
    emit_svg = false

    [system]
    potential = "harmonic"        # harmonic | henon_heiles | anharmonic_chain
    omegas = [1.0, 1.4142135623730951]

    [initial]
    q = [1.0, 1.0]
    p = [0.0, 0.0]

    [run]
    t_max = 1000.0

    [experiment]                  # kind-specific options
    [thresholds]
    lambda_t_final = { max = 1e-2 }

Exit codes: 0 success, 1 validation, 2 numerical failure (including a
declared threshold that is not met), 3 I/O.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import tomli

from .compare import (METRICS, relation_residual, spectrum_peak,
                      write_comparison_csv, write_spectrum_csv)
from .errors import (ConfigurationError, InvariantViolation, NumericalBlowup,
                     PreconditionError, SingularityError)
from .geodesic import JacobiVariationalState, floquet_oracle, jacobi_exponent
from .integrate import (RunConfig, run_trajectory, trajectory_columns,
                        unit_direction, write_trajectory_csv)
from .plot import emit_svg
from .systems import (AnharmonicChain, DiagonalQuadratic, Harmonic, HenonHeiles,
                      PhaseState, SystemSpec)
from .tangent import (TangentState, _norm_weights, benettin_exponent,
                      random_unit_state, write_exponent_csv)
from ._csv import write_columns

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
SEED_ENV = "GEOSPREAD_SEED"

KINDS = ("trajectory", "tangent_lyapunov", "jacobi_lyapunov", "relation_check",
         "floquet_oracle", "spectrum")

# experiment options per kind, with defaults (None = required)
EXPERIMENT_KEYS = {
    "trajectory": {"integrator": "verlet"},
    "tangent_lyapunov": {"xi": (), "xi_dot": ()},
    "jacobi_lyapunov": {"xi": (), "xi_dot": ()},
    "relation_check": {"direction": None, "metric": "jacobi",
                       "identity": "exact", "scheme": "central"},
    "floquet_oracle": {"period": None, "flow": "jacobi", "periodicity_tol": 1e-6},
    "spectrum": {"signal": "T", "window": "none", "integrator": "verlet"},
}

# scalar summary entries that may carry thresholds
SUMMARY_KEYS = {
    "trajectory": ("energy_drift", "min_kinetic", "s_jacobi_final"),
    "tangent_lyapunov": ("lambda_t_final", "lambda_s_final"),
    "jacobi_lyapunov": ("lambda_t_final", "lambda_s_final", "t_guard_hits",
                        "singular_flag"),
    "relation_check": ("max_residual", "max_ds_dtau", "max_correction_norm"),
    "floquet_oracle": ("max_exponent", "min_exponent"),
    "spectrum": ("peak_frequency", "bin_width"),
}

POTENTIAL_KEYS = {
    "harmonic": ("omegas",),
    "henon_heiles": (),
    "anharmonic_chain": ("k2", "k4"),
    "diagonal_quadratic": ("stiffness",),
}

TOP_KEYS = ("kind", "output_dir", "emit_svg", "system", "initial", "run",
            "experiment", "thresholds")


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    kind: str
    system: SystemSpec
    initial: PhaseState
    run: RunConfig
    output_dir: Path
    emit_svg: bool = False
    options: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)


def _bad(name, why):
    raise ConfigurationError(f"{name}: {why}", field=name)


def _strict(table, allowed, where):
    if not isinstance(table, dict):
        _bad(where, "must be a table")
    for key in table:
        if key not in allowed:
            name = f"{where}.{key}" if where else key
            _bad(name, "unknown key")


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _bad(name, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        _bad(name, f"expected an integer, got {value!r}")
    return value


def _vector(value, name, length=None):
    if not isinstance(value, list):
        _bad(name, "expected an array of numbers")
    out = np.array([_number(v, name) for v in value], dtype=float)
    if length is not None and out.size != length:
        _bad(name, f"expected {length} entries, got {out.size}")
    if not np.all(np.isfinite(out)):
        _bad(name, "entries must be finite")
    return out


def _choice(value, options, name):
    if not isinstance(value, str) or value not in options:
        _bad(name, f"must be one of {tuple(options)}, got {value!r}")
    return value


def _parse_system(table):
    if "potential" not in table:
        _bad("system.potential", "missing")
    pot_name = _choice(table["potential"], POTENTIAL_KEYS, "system.potential")
    _strict(table, ("potential", "n_dof", "masses", *POTENTIAL_KEYS[pot_name]),
            "system")
    n = table.get("n_dof")
    if n is not None:
        n = _integer(n, "system.n_dof")
    if pot_name == "harmonic":
        omegas = _vector(table.get("omegas", []), "system.omegas")
        if omegas.size == 0:
            _bad("system.omegas", "missing")
        pot = Harmonic(tuple(omegas))
        n = omegas.size if n is None else n
    elif pot_name == "diagonal_quadratic":
        stiffness = _vector(table.get("stiffness", []), "system.stiffness")
        pot = DiagonalQuadratic(tuple(stiffness))
        n = stiffness.size if n is None else n
    elif pot_name == "anharmonic_chain":
        if n is None:
            _bad("system.n_dof", "required for anharmonic_chain")
        pot = AnharmonicChain(_number(table.get("k2", 1.0), "system.k2"),
                              _number(table.get("k4", 0.0), "system.k4"))
    else:
        pot = HenonHeiles()
        n = 2 if n is None else n
    masses = table.get("masses")
    masses = np.ones(max(n, 1)) if masses is None else _vector(masses, "system.masses")
    return SystemSpec(n, masses, pot)


def _parse_initial(table, n):
    _strict(table, ("t", "q", "p"), "initial")
    for key in ("q", "p"):
        if key not in table:
            _bad(f"initial.{key}", "missing")
    return PhaseState(_number(table.get("t", 0.0), "initial.t"),
                      _vector(table["q"], "initial.q", n),
                      _vector(table["p"], "initial.p", n))


def _parse_run(table):
    names = {f.name: f for f in fields(RunConfig)}
    _strict(table, names, "run")
    kwargs = {}
    for key, value in table.items():
        name = f"run.{key}"
        if key in ("norm_kind", "guard_action"):
            if not isinstance(value, str):
                _bad(name, "expected a string")
            kwargs[key] = value
        elif key in ("record_stride", "renorm_interval", "seed"):
            kwargs[key] = _integer(value, name)
        else:
            kwargs[key] = _number(value, name)
    return RunConfig(**kwargs)


def _parse_options(kind, table, n):
    allowed = EXPERIMENT_KEYS[kind]
    _strict(table, allowed, "experiment")
    opts = {k: v for k, v in allowed.items()}
    opts.update(table)
    for key, default in allowed.items():
        if default is None and key not in table:
            _bad(f"experiment.{key}", f"required for kind {kind!r}")
    if kind == "trajectory":
        _choice(opts["integrator"], ("verlet", "rk4"), "experiment.integrator")
    elif kind in ("tangent_lyapunov", "jacobi_lyapunov"):
        given = [k for k in ("xi", "xi_dot") if k in table]
        if len(given) == 1:
            _bad(f"experiment.{given[0]}", "xi and xi_dot must be given together")
        for key in given:
            opts[key] = _vector(table[key], f"experiment.{key}", n)
    elif kind == "relation_check":
        d = _vector(opts["direction"], "experiment.direction", 2 * n)
        try:
            opts["direction"] = unit_direction(d)
        except PreconditionError as exc:
            raise ConfigurationError(str(exc), field="experiment.direction") from exc
        _choice(opts["metric"], METRICS, "experiment.metric")
        _choice(opts["identity"], ("exact", "wrong"), "experiment.identity")
        _choice(opts["scheme"], ("forward", "central"), "experiment.scheme")
    elif kind == "floquet_oracle":
        period = _number(opts["period"], "experiment.period")
        if not (np.isfinite(period) and period > 0):
            _bad("experiment.period", "must be finite and > 0")
        opts["period"] = period
        _choice(opts["flow"], ("tangent", "jacobi"), "experiment.flow")
        opts["periodicity_tol"] = _number(opts["periodicity_tol"],
                                          "experiment.periodicity_tol")
    elif kind == "spectrum":
        signals = ["T", "V", "E", *[f"q_{i + 1}" for i in range(n)],
                   *[f"p_{i + 1}" for i in range(n)]]
        _choice(opts["signal"], signals, "experiment.signal")
        _choice(opts["window"], ("none", "hann"), "experiment.window")
        _choice(opts["integrator"], ("verlet", "rk4"), "experiment.integrator")
    return opts


def _parse_thresholds(kind, table):
    _strict(table, SUMMARY_KEYS[kind], "thresholds")
    out = {}
    for key, bounds in table.items():
        name = f"thresholds.{key}"
        if not isinstance(bounds, dict) or not bounds:
            _bad(name, "expected a table with min and/or max")
        _strict(bounds, ("min", "max"), name)
        out[key] = {b: _number(v, f"{name}.{b}") for b, v in bounds.items()}
    return out


def parse_config(text: str, environ=None) -> ExperimentSpec:
    """Parse and fully validate an experiment document.

    Unknown keys anywhere are rejected. ``environ`` (e.g. ``os.environ``)
    lets GEOSPREAD_SEED override ``run.seed``.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"line {exc.lineno}: {exc.msg}",
                                 lineno=exc.lineno) from exc
    _strict(doc, TOP_KEYS, "")
    if "kind" not in doc:
        _bad("kind", "missing")
    kind = _choice(doc["kind"], KINDS, "kind")
    for key in ("system", "initial"):
        if key not in doc:
            _bad(key, "missing table")
    system = _parse_system(doc["system"])
    initial = _parse_initial(doc["initial"], system.n_dof)
    run = _parse_run(doc.get("run", {}))
    if environ is not None and environ.get(SEED_ENV):
        try:
            seed = int(environ[SEED_ENV])
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer",
                                     field=SEED_ENV) from None
        run = replace(run, seed=seed)
    output_dir = doc.get("output_dir", "geospread-out")
    if not isinstance(output_dir, str) or not output_dir:
        _bad("output_dir", "expected a non-empty string")
    emit = doc.get("emit_svg", False)
    if not isinstance(emit, bool):
        _bad("emit_svg", "expected true or false")
    options = _parse_options(kind, doc.get("experiment", {}), system.n_dof)
    thresholds = _parse_thresholds(kind, doc.get("thresholds", {}))
    return ExperimentSpec(kind, system, initial, run, Path(output_dir), emit,
                          options, thresholds)


def load_config(path, environ=None) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), environ)


def _variational_start(spec, cls):
    opts = spec.options
    if len(opts.get("xi", ())):
        return cls(opts["xi"], opts["xi_dot"])
    start = random_unit_state(spec.system.n_dof, spec.run.seed, cls)
    if spec.run.norm_kind == "metric":
        # rescale to unit norm in the metric weights of the chosen flow
        flow = "jacobi" if cls is JacobiVariationalState else "tangent"
        w = _norm_weights(spec.system, spec.initial, spec.run, flow)
        nrm = start.norm(w)
        start = cls(start.xi / nrm, start.xi_dot / nrm)
    return start


def _execute(spec: ExperimentSpec, out: Path):
    """Run the experiment, write artifacts into ``out``; return
    (summary values, {csv name: default plot columns})."""
    sysm, init, cfg, opts = spec.system, spec.initial, spec.run, spec.options
    values, plots = {}, {}
    if spec.kind == "trajectory":
        rec = run_trajectory(sysm, init, cfg, integrator=opts["integrator"])
        write_trajectory_csv(rec, out / "trajectory.csv")
        values.update(energy_drift=rec.energy_drift, drift_flag=int(rec.drift_flag),
                      min_kinetic=float(np.min(rec.kinetic)),
                      s_jacobi_final=float(rec.s_jacobi[-1]), t_final=float(rec.t[-1]))
        plots["trajectory.csv"] = ("t", [f"q_{i + 1}" for i in range(sysm.n_dof)])
    elif spec.kind in ("tangent_lyapunov", "jacobi_lyapunov"):
        if spec.kind == "tangent_lyapunov":
            series = benettin_exponent(sysm, init, _variational_start(spec, TangentState), cfg)
        else:
            series = jacobi_exponent(
                sysm, init, _variational_start(spec, JacobiVariationalState), cfg)
            values.update(
                t_guard_hits=int(series.t_guard_hits[-1]) if len(series) else 0,
                singular_flag=int(series.singular_flag),
                singular_t=float(series.singular_t) if series.singular_flag else None)
        write_exponent_csv(series, out / "exponents.csv")
        final = len(series) > 0
        values.update(
            lambda_t_final=float(series.lambda_t[-1]) if final else None,
            lambda_s_final=float(series.lambda_s[-1]) if final else None,
            t_final=float(series.t[-1]) if final else float(init.t),
            renorm_count=int(series.renorm_count[-1]) if final else 0,
            norm_kind=cfg.norm_kind)
        plots["exponents.csv"] = ("t", ["lambda_t"])
    elif spec.kind == "relation_check":
        comp = relation_residual(sysm, init, opts["direction"], cfg,
                                 metric=opts["metric"], identity=opts["identity"],
                                 scheme=opts["scheme"])
        write_comparison_csv(comp, out / "comparison.csv")
        values.update(max_residual=comp.max_residual,
                      max_ds_dtau=float(np.max(np.abs(comp.ds_dtau))),
                      max_correction_norm=float(np.max(comp.correction_norm)),
                      metric=opts["metric"], identity=opts["identity"],
                      scheme=opts["scheme"], dtau=cfg.dtau,
                      direction=[float(v) for v in comp.direction])
        plots["comparison.csv"] = ("t", ["residual"])
    elif spec.kind == "floquet_oracle":
        res = floquet_oracle(sysm, init, opts["period"], cfg, flow=opts["flow"],
                             periodicity_tol=opts["periodicity_tol"])
        idx = np.arange(len(res.exponents), dtype=np.int64)
        write_columns(out / "floquet.csv",
                      ["index", "exponent", "multiplier_re", "multiplier_im"],
                      [idx, res.exponents, res.multipliers.real, res.multipliers.imag])
        values.update(max_exponent=res.max_exponent,
                      min_exponent=float(res.exponents[-1]),
                      period=res.period, flow=res.flow,
                      exponents=[float(v) for v in res.exponents])
    elif spec.kind == "spectrum":
        rec = run_trajectory(sysm, init, cfg, integrator=opts["integrator"])
        header, cols = trajectory_columns(rec)
        signal = cols[header.index(opts["signal"])]
        report = spectrum_peak(signal, cfg.dt * cfg.record_stride, opts["window"])
        write_spectrum_csv(report, out / "spectrum.csv")
        values.update(peak_frequency=None if report.dc_only else report.peak_frequency,
                      dc_only=int(report.dc_only), bin_width=report.bin_width,
                      signal=opts["signal"], window=opts["window"])
        plots["spectrum.csv"] = ("angular_frequency", ["amplitude"])
    return values, plots


def _check_thresholds(values, thresholds):
    checks, passed = {}, True
    for key, bounds in thresholds.items():
        v = values.get(key)
        ok = v is not None and np.isfinite(v)
        if ok and "min" in bounds:
            ok = v > bounds["min"]
        if ok and "max" in bounds:
            ok = v < bounds["max"]
        checks[key] = dict(bounds, value=v, passed=bool(ok))
        passed = passed and bool(ok)
    return checks, passed


def run_experiment(spec: ExperimentSpec):
    """Run one experiment; returns (exit code, summary dict or None).

    Files are staged in a private directory inside ``output_dir`` and moved
    into place only after everything succeeded, so a failing run leaves no
    partial artifacts behind.
    """
    try:
        spec.output_dir.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=spec.output_dir))
    except OSError as exc:
        log.error("output directory %s is not writable: %s", spec.output_dir, exc)
        return EXIT_IO, None
    try:
        try:
            values, plots = _execute(spec, staging)
        except (NumericalBlowup, SingularityError, PreconditionError,
                InvariantViolation) as exc:
            log.error("%s: %s", type(exc).__name__, exc)
            return EXIT_NUMERICAL, None
        except ConfigurationError as exc:
            log.error("invalid experiment: %s", exc)
            return EXIT_VALIDATION, None
        checks, passed = _check_thresholds(values, spec.thresholds)
        summary = {"kind": spec.kind, "seed": spec.run.seed, **values,
                   "thresholds": checks, "passed": passed}
        if spec.emit_svg:
            for name, (x, ys) in plots.items():
                emit_svg(staging / name, x, ys)
        with open(staging / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for item in sorted(staging.iterdir()):
            os.replace(item, spec.output_dir / item.name)
    except OSError as exc:
        log.error("writing artifacts failed: %s", exc)
        return EXIT_IO, None
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return (EXIT_OK if passed else EXIT_NUMERICAL), summary


def _cmd_run(args):
    try:
        spec = load_config(args.config, os.environ)
    except OSError as exc:
        log.error("cannot read %s: %s", args.config, exc)
        return EXIT_IO
    except ConfigurationError as exc:
        log.error("invalid config %s: %s", args.config, exc)
        return EXIT_VALIDATION
    code, summary = run_experiment(spec)
    if summary is not None:
        print(json.dumps(summary, sort_keys=True))
    return code


def _cmd_plot(args):
    try:
        path = emit_svg(args.csv, args.x, args.y, args.out)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ConfigurationError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    print(path)
    return EXIT_OK


def _cmd_accept(args):
    from .acceptance import run_all
    if args.workers < 1:
        log.error("--workers must be >= 1")
        return EXIT_VALIDATION
    results = run_all(workers=args.workers, only=args.only)
    for r in results:
        print(r.line(), flush=True)
    if args.json:
        try:
            with open(args.json, "w") as fh:
                json.dump([r.as_dict() for r in results], fh, indent=2, sort_keys=True)
        except OSError as exc:
            log.error("%s", exc)
            return EXIT_IO
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="geospread",
        description="Tangent dynamics vs geodesic spread experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment from a TOML document")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot", help="render CSV columns as an SVG line chart")
    p.add_argument("csv")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True, help="comma-separated column names")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--only", default=None, help="comma-separated criteria, e.g. A1,A5")
    p.add_argument("--json", default=None, help="also write results to this file")
    p.set_defaults(func=_cmd_accept)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
