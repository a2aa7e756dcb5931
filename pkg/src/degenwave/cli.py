"""Command line harness: presets, config resolution, CSV/JSON artifacts and manifests.

Resolution order for every parameter: preset default < ``--config`` file < explicit flag.
Exit codes: 0 ok, 1 a preset's bracket failed, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .decay import (DecayError, build_decay_model, calibrate, decay_run, decay_table, fit_decay_rate,
                    predict_envelope, rate_law)
from .discretization import LinearDamped
from .dynamics import Bump, Eigen, FeedbackLaw, RandomSmooth, Samples, SimConfig, SimulationError, run
from .hum import HumProblem, solve_hum
from .observability import ObservabilityError, blowup_sweep, check_bounds, failure_demo, observe_run
from .spectral import SpectralError, first_eigenpair
from .weights import Weight, WeightError

log = logging.getLogger("degenwave")

EXIT_OK = 0
EXIT_BRACKET = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

PRESETS = ("conserve", "observe", "blowup", "failure", "spectrum", "hum", "stabilize_linear",
           "stabilize_nonlinear", "decay_table")

DEFAULTS = {
    "conserve": {"theta": 0.5, "T": 10.0, "grid": 400, "dt": None, "data": "random"},
    "observe": {"theta": 0.5, "T": None, "grid": 400, "dt": None, "data": "random", "samples": 1},
    "blowup": {"thetas": "1.0,1.5,1.8,1.95", "T": 10.0, "grid": 800, "phase": "optimal", "simulate": True},
    "failure": {"theta": 2.0, "support": "0.1,0.3", "T": 3.0, "grid": 1600, "dt": None},
    "spectrum": {"theta": 1.5, "grid": 200},
    "hum": {"theta": 0.5, "T": None, "grid": 200, "dt": None, "tol": 1e-8, "max_iter": 500, "method": "cr"},
    "stabilize_linear": {"theta": 0.5, "beta": 1.0, "T": 300.0, "grid": 400, "dt": None, "data": "random"},
    "stabilize_nonlinear": {"feedback": "poly:3", "theta": 0.5, "beta": 1.0, "T": 2000.0, "grid": 400,
                            "dt": None, "data": "bump:0.5,0.5"},
    "decay_table": {"theta": 0.5, "beta": 1.0, "grid": 400, "simulate": "poly:2,poly:3"},
}

NUMERICAL_ERRORS = (SimulationError, SpectralError, DecayError, FloatingPointError, np.linalg.LinAlgError,
                    ArithmeticError)


class UsageError(ValueError):
    pass


# -- helpers -------------------------------------------------------------------

def worker_count() -> int:
    env = os.environ.get("DEGENWAVE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"DEGENWAVE_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def fan_out(fn: Callable, cells: list) -> list:
    """Map over independent sweep cells; order of results follows ``cells``."""
    workers = min(worker_count(), len(cells))
    if workers <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file {path} not found")
    if p.suffix.lower() == ".toml":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    with open(p) as fh:
        return json.load(fh)


def parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_data(text: str, seed: int, theta: float):
    """``random``, ``bump:center,width``, ``eigen[:phase]`` or ``file:path``."""
    name, _, args = str(text).partition(":")
    if name == "random":
        return RandomSmooth(seed)
    if name == "bump":
        vals = parse_floats(args) if args else [0.5, 0.4]
        return Bump(*vals)
    if name == "eigen":
        return Eigen(theta, float(args) if args else 0.0)
    if name == "file":
        return Samples(args)
    raise UsageError(f"unknown initial data {text!r}")


def resolve(preset: str, cfg_file: dict, flags: dict) -> dict:
    out = dict(DEFAULTS[preset])
    section = cfg_file.get(preset, cfg_file)
    for k, v in section.items():
        if k in ("weight", "seed", "out") or k in out:
            out[k] = v
    for k, v in flags.items():
        if v is not None and (k in out or k in ("weight",)):
            out[k] = v
    return out


def weight_of(params: dict, nonadmissible: bool = False) -> Weight:
    if "weight" in params and isinstance(params["weight"], dict):
        return Weight.from_spec(params["weight"])
    th = float(params["theta"])
    return Weight.nonadmissible_power(th) if nonadmissible else Weight.power(th)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- presets -------------------------------------------------------------------
# each returns (ok, report dict, list of written files)

def preset_conserve(p: dict, out: Path, seed: int):
    w = weight_of(p)
    data = parse_data(p["data"], seed, w.theta)
    tr = run(SimConfig(w, int(p["grid"]), float(p["T"]), data, dt=p["dt"]))
    drift = float(np.max(np.abs(tr.energy / tr.energy[0] - 1.0)))
    f = out / "conserve.csv"
    tr.to_csv(f)
    return drift <= 1e-8, {"max_relative_drift": drift, "E0": float(tr.energy[0])}, [f]


def _observe_cell(cell):
    wspec, T, n, dt, data, label = cell
    rep, tr = observe_run(Weight.from_spec(wspec), T, data, n, dt, label)
    return rep, check_bounds(rep), tr


def preset_observe(p: dict, out: Path, seed: int):
    w = weight_of(p)
    T = float(p["T"]) if p["T"] is not None else 2.0 * w.constants().T_a
    k = int(p["samples"])
    cells = [(w.to_spec(), T, int(p["grid"]), p["dt"], parse_data(p["data"], seed + i, w.theta),
              f"{p['data']}#{seed + i}") for i in range(k)]
    results = fan_out(_observe_cell, cells)
    files, rows = [], []
    for i, (rep, chk, tr) in enumerate(results):
        f = out / f"observe_trace_{i:03d}.csv"
        tr.to_csv(f)
        files.append(f)
        rows.append([rep.theta, rep.T, seed + i, rep.quotient, rep.a_at_1 * rep.quotient, rep.lower_bound,
                     rep.direct_bound, chk.lower_ok, chk.upper_ok, chk.label])
    f = out / "observe.csv"
    write_csv(f, ["theta", "T", "seed", "quotient", "a1_quotient", "lower_bound", "direct_bound", "lower_ok",
                  "upper_ok", "label"], rows)
    files.append(f)
    ok = all(c.passed for _, c, _ in results)
    report = {"reports": [r.to_dict() for r, _, _ in results],
              "checks": [asdict(c) for _, c, _ in results], "all_passed": ok}
    return ok, report, files


def _blowup_cell(cell):
    th, T, n, phase = cell
    return blowup_sweep([th], T, n, phase)[0]


def preset_blowup(p: dict, out: Path, seed: int):
    thetas = parse_floats(p["thetas"])
    n = int(p["grid"]) if p["simulate"] else None
    rows = fan_out(_blowup_cell, [(th, float(p["T"]), n, p["phase"]) for th in thetas])
    f = out / "blowup.csv"
    write_csv(f, ["theta", "T", "bound", "closed_form", "closed_form_sin_phase", "simulated", "rel_error", "phase"],
              [[r.theta, r.T, r.bound, r.closed_form, r.closed_form_sin_phase, r.simulated, r.rel_error, r.phase]
               for r in rows])
    cf = [r.closed_form for r in rows]
    decreasing = all(a > b for a, b in zip(cf, cf[1:]))
    below = all(r.closed_form <= r.bound for r in rows)
    sim_ok = all(r.rel_error is None or r.rel_error <= 0.02 for r in rows)
    report = {"rows": [dict(asdict(r), rel_error=r.rel_error) for r in rows], "strictly_decreasing": decreasing,
              "below_bound": below, "simulation_within_2pct": sim_ok}
    return decreasing and below and sim_ok, report, [f]


def preset_failure(p: dict, out: Path, seed: int):
    support = tuple(parse_floats(p["support"]))
    if len(support) != 2:
        raise UsageError("--support needs two numbers x1,x2")
    rep = failure_demo(float(p["theta"]), support, float(p["T"]), int(p["grid"]), p["dt"])
    silent = rep.T <= rep.horizon
    ok = rep.ratio <= 1e-6 if silent else True
    report = dict(asdict(rep), ratio=rep.ratio, within_silent_horizon=silent)
    return ok, report, []


def preset_spectrum(p: dict, out: Path, seed: int):
    ep = first_eigenpair(float(p["theta"]))
    n = int(p["grid"])
    x = np.arange(1, n + 1) / n
    y = ep.eigenfunction(x)
    f = out / "spectrum.csv"
    write_csv(f, ["x", "y_theta"], zip(x, y))
    return True, ep.to_dict(), [f]


def preset_hum(p: dict, out: Path, seed: int):
    w = weight_of(p)
    T = float(p["T"]) if p["T"] is not None else 1.5 * w.constants().T_a
    n = int(p["grid"])
    x = np.arange(n + 1) / n
    prob = HumProblem(w, T, np.sin(np.pi * x), np.zeros(n + 1), n, p["dt"])
    sol = solve_hum(prob, float(p["tol"]), int(p["max_iter"]), p["method"])
    f = out / "hum_control.csv"
    write_csv(f, ["t", "f"], zip(sol.times, sol.f))
    diag = sol.diagnostics()
    diag.update(T=T, control_l2=sol.control_norm(prob.dt))
    return sol.relative_final_norm <= 1e-2, diag, [f]


def preset_stabilize_linear(p: dict, out: Path, seed: int):
    w = weight_of(p)
    beta = float(p["beta"])
    data = parse_data(p["data"], seed, w.theta)
    tr = run(SimConfig(w, int(p["grid"]), float(p["T"]), data, bc_right=LinearDamped(beta), dt=p["dt"]))
    M = w.constants(beta).M_a_beta
    k = tr.times >= M
    bound_ok = bool(np.all(tr.energy[k] <= tr.energy[0] * np.exp(1.0 - tr.times[k] / M)))
    fit = fit_decay_rate(tr.times, tr.energy, "exponential")
    f = out / "stabilize_linear.csv"
    tr.to_csv(f)
    report = {"M_a_beta": M, "bound_holds": bound_ok, "checked_times": int(k.sum()), "fit": fit.to_dict()}
    return bound_ok and fit.r2 >= 0.99, report, [f]


def preset_stabilize_nonlinear(p: dict, out: Path, seed: int):
    w = weight_of(p)
    law = FeedbackLaw.parse(p["feedback"])
    data = parse_data(p["data"], seed, w.theta)
    tr = decay_run(law, w.theta, float(p["beta"]), int(p["grid"]), float(p["T"]), data, p["dt"])
    files = [out / "decay_trace.csv"]
    tr.to_csv(files[0])
    m = build_decay_model(law)
    report = {"feedback": law.label()}
    if m.exponential_regime:
        report["model"] = m.summary()
        fit = fit_decay_rate(tr.times, tr.energy, "exponential")
        report.update(fitted_exponent=fit.exponent, expected_exponent=None, fit=fit.to_dict(), r0=m.r0)
        return fit.r2 >= 0.99, report, files
    cal, _ = calibrate(tr, m)
    idx = np.unique(np.linspace(0, tr.times.size - 1, 1000).astype(int))
    env = predict_envelope(m, tr.energy[0], cal.gamma, cal.M, tr.times[idx], cal.kappa)
    f = out / "decay.csv"
    write_csv(f, ["t", "E", "E_pred_envelope"], zip(tr.times[idx], tr.energy[idx], env.full))
    files.append(f)
    expected = rate_law(law).expected if law.kind != "linear" else None
    fitted, rel = None, None
    try:
        fit = fit_decay_rate(tr.times, tr.energy, "power", expected)
        fitted, rel = fit.exponent, fit.relative_error
        report["fit"] = fit.to_dict()
    except DecayError as exc:
        report["fit_error"] = str(exc)
    report.update(model=m.summary(), fitted_exponent=fitted, expected_exponent=expected, gamma=cal.gamma, M=cal.M,
                  r0=m.r0,
                  lambdaH_sup=m.lambda_sup(), calibration=cal.to_dict())
    ok = cal.dominated and (law.kind != "poly" or (rel is not None and rel <= 0.15))
    return ok, report, files


def preset_decay_table(p: dict, out: Path, seed: int):
    sim = _split_laws(str(p["simulate"]))
    rows = decay_table(simulate=sim, theta=float(p["theta"]), beta=float(p["beta"]), n=int(p["grid"]))
    f = out / "decay_table.csv"
    write_csv(f, ["law", "rate", "expected", "envelope_exponent", "envelope_r2", "simulated_exponent",
                  "simulated_r2", "energy_drop"],
              [[r.law, r.rate, r.expected, r.envelope_exponent, r.envelope_r2, r.simulated_exponent,
                r.simulated_r2, r.energy_drop] for r in rows])
    ok = True
    for r in rows:
        ok &= abs(r.envelope_exponent - r.expected) <= 0.05 * abs(r.expected)
        if r.simulated_exponent is not None:
            ok &= abs(r.simulated_exponent - r.expected) <= 0.15 * abs(r.expected)
    return bool(ok), {"rows": [r.to_dict() for r in rows]}, [f]


def _split_laws(text: str) -> list[str]:
    """Split ``poly:2,poly:3`` on commas that start a new law name."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if out and tok[0].isdigit():
            out[-1] += "," + tok
        else:
            out.append(tok)
    return out


RUNNERS = {
    "conserve": preset_conserve,
    "observe": preset_observe,
    "blowup": preset_blowup,
    "failure": preset_failure,
    "spectrum": preset_spectrum,
    "hum": preset_hum,
    "stabilize_linear": preset_stabilize_linear,
    "stabilize_nonlinear": preset_stabilize_nonlinear,
    "decay_table": preset_decay_table,
}

# subcommands that are aliases of presets
ALIASES = {"decay": "stabilize_nonlinear", "stabilize": "stabilize_linear"}


def run_preset(preset: str, params: dict, out: Path, seed: int) -> int:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"preset": preset, "config": params, "seed": seed, "version": __version__,
                "numpy": np.__version__}
    try:
        ok, report, files = RUNNERS[preset](params, out, seed)
    except (UsageError, WeightError, ObservabilityError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except NUMERICAL_ERRORS as exc:
        log.error("numerical failure: %s", exc)
        manifest["status"] = "numerical_failure"
        manifest["error"] = str(exc)
        write_json(out / "manifest.json", manifest)
        return EXIT_NUMERICAL
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    write_json(out / f"{preset}.json", report)
    manifest["status"] = "ok" if ok else "bracket_failed"
    manifest["files"] = sorted([f.name for f in files] + [f"{preset}.json"])
    write_json(out / "manifest.json", manifest)
    print(f"{preset}: {'ok' if ok else 'FAILED'} -> {out}")
    return EXIT_OK if ok else EXIT_BRACKET


# -- argument parsing -------------------------------------------------------------

def _add_flags(sp: argparse.ArgumentParser, names: set[str]) -> None:
    def add(name, **kw):
        if name in names:
            sp.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, **kw)

    add("theta", type=float, help="weight exponent, a(x) = x^theta")
    add("thetas", help="comma-separated exponents")
    add("T", type=float, help="final time")
    add("grid", type=int, help="number of cells")
    add("dt", type=float, help="time step (default h/2)")
    add("data", help="random | bump:c,w | eigen[:phase] | file:path")
    add("samples", type=int, help="number of random data sets")
    add("phase", choices=["optimal", "sin"])
    add("support", help="x1,x2")
    add("tol", type=float)
    add("max_iter", type=int)
    add("method", choices=["cr", "cg"])
    add("beta", type=float)
    add("feedback", help="linear[:c] | poly:p | polylog:p,q | expinvsq | explogpow:p")
    add("simulate", help="laws to simulate (decay_table)")


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON or TOML file with parameters")
    sp.add_argument("--out", help="output directory (default out/<preset>)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("-v", "--verbose", action="store_true")


ALL_FLAGS = {"theta", "thetas", "T", "grid", "dt", "data", "samples", "phase", "support", "tol", "max_iter",
             "method", "beta", "feedback", "simulate"}

SUBCOMMAND_FLAGS = {
    "spectrum": {"theta", "grid"},
    "observe": {"theta", "T", "grid", "dt", "data", "samples"},
    "blowup": {"thetas", "T", "grid", "phase"},
    "failure": {"theta", "support", "T", "grid", "dt"},
    "hum": {"theta", "T", "grid", "dt", "tol", "max_iter", "method"},
    "decay": {"feedback", "beta", "theta", "T", "grid", "dt", "data"},
    "stabilize": {"theta", "beta", "T", "grid", "dt", "data"},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degenwave", description="Boundary-degenerate wave equation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, flags in SUBCOMMAND_FLAGS.items():
        sp = sub.add_parser(name)
        _common(sp)
        _add_flags(sp, flags)
        if name == "blowup":
            sp.add_argument("--no-simulate", dest="simulate", action="store_false", default=None)
    sp = sub.add_parser("run", help="run a named preset")
    sp.add_argument("preset", choices=PRESETS)
    _common(sp)
    _add_flags(sp, ALL_FLAGS)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    preset = args.preset if args.command == "run" else ALIASES.get(args.command, args.command)
    try:
        cfg = load_config(args.config)
        flags = {k: v for k, v in vars(args).items() if k in ALL_FLAGS}
        params = resolve(preset, cfg, flags)
        seed = args.seed if args.seed is not None else int(params.pop("seed", 0))
        params.pop("seed", None)
        out = Path(args.out or params.pop("out", None) or Path("out") / preset)
        params.pop("out", None)
        worker_count()
    except (UsageError, ValueError, OSError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run_preset(preset, params, out, seed)


if __name__ == "__main__":
    sys.exit(main())
