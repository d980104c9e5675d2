"""Command-line front end.

Subcommands: ``analyze``, ``simulate``, ``search-gain``, ``verify-paper``.
Exit codes: 0 converges, 1 unstable, 2 inconclusive, 3 divergence,
4 numerical failure, 64 bad usage or configuration.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import platform
import re
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .acceptance import run_all
from .examples import ExampleEntry, example_names, get_example
from .floquet import (TOL_MARGIN, TOL_UNIT, NumericalError, Verdict, analyze,
                      monodromy_integral, monodromy_propagate)
from .gainsearch import GainSearchSpec, search
from .model import (BASE_SCHEDULE, DomainError, FeedbackLaw, LinearPeriodicSystem,
                    NonlinearAutonomousSystem, SwitchingSchedule)
from .odeint import DivergenceError, IntegratorConfig
from .simulate import PreconditionError, convergence_diagnostics, predict_limit, simulate_closed_loop
from .variational import build_variational, verify_unit_eigenvector

EXIT_CODES = {Verdict.CONVERGES: 0, Verdict.UNSTABLE: 1, Verdict.INCONCLUSIVE: 2}
EXIT_DIVERGED = 3
EXIT_NUMERICAL = 4
EXIT_USAGE = 64

_VALUE_OPTIONS = {"--gain", "--x0", "--box", "--schedule"}
_NEGATIVE = re.compile(r"^-[\d.]")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text, what):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not all(np.isfinite(vals)):
        raise ConfigError(f"{what}: values must be finite")
    return vals


@dataclass
class RunConfig:
    example: str = "ex41"
    gain: Optional[list] = None
    schedule: Optional[tuple] = None
    x0: Optional[list] = None
    cycles: int = 30
    steps_per_period: int = 4000
    out: Optional[str] = None
    tol_unit: float = TOL_UNIT
    tol_margin: float = TOL_MARGIN
    box: Optional[list] = None
    grid_points: int = 21
    refine: bool = True
    entry: ExampleEntry = field(init=False, repr=False)

    def __post_init__(self):
        try:
            self.entry = get_example(self.example)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        sysm = self.entry.system
        mn = sysm.input_dim * sysm.dim
        if self.gain is not None and len(self.gain) != mn:
            raise ConfigError(f"--gain needs {mn} values (row-major {sysm.input_dim}x{sysm.dim})")
        if self.x0 is not None and len(self.x0) != sysm.dim:
            raise ConfigError(f"--x0 needs {sysm.dim} values")
        if self.box is not None and len(self.box) != mn:
            raise ConfigError(f"--box needs {mn} lo:hi pairs")
        if self.cycles < 1:
            raise ConfigError("--cycles must be >= 1")
        if self.grid_points < 1:
            raise ConfigError("--grid-points must be >= 1")
        for name in ("tol_unit", "tol_margin"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"--{name.replace('_', '-')} must be positive and finite")
        try:
            self.cfg = IntegratorConfig(self.steps_per_period)
            self.law = FeedbackLaw(
                self.entry.law.gain if self.gain is None
                else np.reshape(self.gain, (sysm.input_dim, sysm.dim)),
                self.entry.law.schedule if self.schedule is None
                else SwitchingSchedule(*self.schedule))
        except DomainError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_args(cls, args):
        kw = dict(example=args.example, steps_per_period=args.steps_per_period,
                  out=args.out, tol_unit=args.tol_unit, tol_margin=args.tol_margin)
        if getattr(args, "gain", None):
            kw["gain"] = _floats(args.gain, "--gain")
        if getattr(args, "schedule", None):
            vals = _floats(args.schedule, "--schedule")
            if len(vals) != 3 or any(v != int(v) for v in vals):
                raise ConfigError("--schedule expects three integers w,a,d")
            kw["schedule"] = tuple(int(v) for v in vals)
        if getattr(args, "x0", None):
            kw["x0"] = _floats(args.x0, "--x0")
        if getattr(args, "cycles", None) is not None:
            kw["cycles"] = args.cycles
        if getattr(args, "box", None):
            pairs = []
            for item in args.box.split(","):
                parts = item.split(":")
                if len(parts) != 2:
                    raise ConfigError(f"--box entries must be lo:hi, got {item!r}")
                pairs.append(tuple(_floats(",".join(parts), "--box")))
            kw["box"] = pairs
        if getattr(args, "grid_points", None) is not None:
            kw["grid_points"] = args.grid_points
        if getattr(args, "no_refine", False):
            kw["refine"] = False
        return cls(**kw)

    @property
    def linear_system(self):
        """System whose monodromy is analyzed (variational for nonlinear examples)."""
        sysm = self.entry.system
        if isinstance(sysm, NonlinearAutonomousSystem):
            return build_variational(sysm).base
        return sysm

    def describe(self):
        s = self.law.schedule
        return {"example": self.example, "gain": self.law.gain.tolist(),
                "schedule": {"wait": s.wait, "act": s.act, "delay": s.delay},
                "steps_per_period": self.steps_per_period,
                "tol_unit": self.tol_unit, "tol_margin": self.tol_margin}


def _cplx(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=False, allow_nan=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _write_metadata(out, command, argv):
    meta = {"tool": "floquet-aaw", "version": __version__, "command": command,
            "argv": list(argv), "python": platform.python_version(),
            "numpy": np.__version__,
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    _dump(meta, os.path.join(out, "metadata.json"))


def _system_info(entry):
    return {"name": entry.system.name, "description": entry.description,
            "kind": "nonlinear (variational)" if isinstance(entry.system, NonlinearAutonomousSystem)
            else "linear periodic",
            "references": {k: g.citation for k, g in entry.goldens.items()}}


def cmd_analyze(rc, argv=()):
    sysm = rc.linear_system
    report = analyze(sysm, rc.law, rc.cfg, rc.tol_unit, rc.tol_margin)
    route = None
    if rc.law.schedule == BASE_SCHEDULE:
        other = monodromy_propagate(sysm, rc.law, rc.cfg)
        route = float(np.max(np.abs(report.Lambda - other)))
    payload = {
        "config": rc.describe(),
        "system": _system_info(rc.entry),
        "cycle_time": report.cycle_time,
        "Lambda": report.Lambda.tolist(),
        "eigenvalues": [_cplx(z) for z in report.eigenvalues],
        "eigenvectors": [[_cplx(z) for z in report.eigenvectors[:, i]]
                         for i in range(report.eigenvectors.shape[1])],
        "kappa": report.kappa,
        "unit_semisimple": report.unit_semisimple,
        "spectral_radius_excl_unit": report.spectral_radius_excl_unit,
        "verdict": report.verdict.value,
        "route_agreement": route,
    }
    if isinstance(rc.entry.system, NonlinearAutonomousSystem):
        vs = build_variational(rc.entry.system)
        payload["unit_eigenvector_residual"] = verify_unit_eigenvector(vs, report.Lambda)
    path = None
    if rc.out:
        os.makedirs(rc.out, exist_ok=True)
        path = os.path.join(rc.out, "report.json")
        _write_metadata(rc.out, "analyze", argv)
    print(_dump(payload, path))
    return EXIT_CODES[report.verdict]


def write_trajectory_csv(path, traj, rows=None):
    """Write ``t,x1..xn,u1..um,switch`` with 17 significant digits."""
    n, m = traj.states.shape[1], traj.inputs.shape[1]
    count = len(traj.times) if rows is None else rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]
                   + ["switch"])
        for j in range(count):
            w.writerow([f"{traj.times[j]:.17g}"] + [f"{v:.17g}" for v in traj.states[j]]
                       + [f"{v:.17g}" for v in traj.inputs[j]] + [str(int(traj.switch[j]))])


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: ``(times, states, inputs, switch)``."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        body = [row for row in r]
    n = sum(1 for h in header if h.startswith("x"))
    data = np.array([[float(v) for v in row[:-1]] for row in body]).reshape(len(body), -1)
    switch = np.array([int(row[-1]) for row in body], dtype=np.int8)
    return data[:, 0], data[:, 1:1 + n], data[:, 1 + n:], switch


class _Partial:
    def __init__(self, times, states, inputs, switch):
        self.times, self.states, self.inputs, self.switch = times, states, inputs, switch


def orbit_distance(sol, x, samples=512):
    """Distance from ``x`` to the closed curve ``x*([0, T))``."""
    ts = np.linspace(0.0, sol.period, samples, endpoint=False)
    d = np.array([np.linalg.norm(sol(t) - x) for t in ts])
    i = int(np.argmin(d))
    step = sol.period / samples
    res = minimize_scalar(lambda t: np.linalg.norm(sol(t) - x),
                          bounds=(ts[i] - step, ts[i] + step), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, d[i]))


def cmd_simulate(rc, argv=()):
    entry = rc.entry
    sysm = entry.system
    x0 = np.array(rc.x0 if rc.x0 is not None else entry.x0, dtype=float)
    out = rc.out or "."
    os.makedirs(out, exist_ok=True)
    _write_metadata(out, "simulate", argv)
    csv_path = os.path.join(out, "trajectory.csv")
    json_path = os.path.join(out, "limit.json")
    try:
        traj = simulate_closed_loop(sysm, rc.law, x0, rc.cycles, rc.cfg)
    except DivergenceError as exc:
        if hasattr(exc, "partial"):
            states, inputs, switch = exc.partial
            times = sysm.period * np.arange(len(states)) / rc.steps_per_period
            write_trajectory_csv(csv_path, _Partial(times, states, inputs, switch))
        _dump({"config": rc.describe(), "error": "divergence", "time": exc.time,
               "message": str(exc)}, os.path.join(out, "error.json"))
        print(f"diverged at t={exc.time:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    write_trajectory_csv(csv_path, traj)

    lin = rc.linear_system
    report = analyze(lin, rc.law, rc.cfg, rc.tol_unit, rc.tol_margin)
    nonlinear = isinstance(sysm, NonlinearAutonomousSystem)
    if nonlinear:
        sol = sysm.periodic_solution
        anchor, ref, unit = sol(0.0), x0 - sol(0.0), sol.velocity(0.0)
    else:
        anchor, ref = np.zeros(sysm.dim), x0
        unit = sysm.x_star(0.0) if sysm.x_star is not None else None
    payload = {"config": rc.describe(), "x0": x0.tolist(), "cycles": rc.cycles,
               "verdict": report.verdict.value,
               "linearized_about_orbit": nonlinear}
    try:
        use_unit = unit if (unit is not None and report.kappa == 1) else None
        try:
            pred = predict_limit(report.Lambda, ref, rc.tol_unit, rc.tol_margin, use_unit)
        except DomainError:
            pred = predict_limit(report.Lambda, ref, rc.tol_unit, rc.tol_margin)
        limit = anchor + pred.limit_point
        diag = convergence_diagnostics(traj, limit)
        payload.update({
            "alphas": [_cplx(a) for a in pred.alphas],
            "basis": [[_cplx(z) for z in pred.basis[:, i]] for i in range(pred.basis.shape[1])],
            "kappa": pred.kappa,
            "limit_point": limit.tolist(),
            "distances": diag.distances.tolist(),
            "final_distance": diag.final,
            "monotone_tail": diag.monotone_tail,
            "warning": pred.warning,
        })
    except PreconditionError as exc:
        payload.update({"alphas": None, "limit_point": None, "distances": None,
                        "final_distance": None, "reason": str(exc)})
    if nonlinear:
        payload["final_orbit_distance"] = orbit_distance(sysm.periodic_solution, traj.states[-1])
    payload["final_state"] = traj.states[-1].tolist()
    print(_dump(payload, json_path))
    return 0


def cmd_search_gain(rc, argv=()):
    if rc.box is None:
        raise ConfigError("search-gain requires --box lo:hi,... (row-major)")
    sysm = rc.linear_system
    shape = (sysm.input_dim, sysm.dim)
    lo = np.reshape([p[0] for p in rc.box], shape)
    hi = np.reshape([p[1] for p in rc.box], shape)
    try:
        spec = GainSearchSpec(lo, hi, rc.grid_points, rc.refine)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    res = search(sysm, rc.law.schedule, spec, rc.cfg, rc.tol_unit, rc.tol_margin)
    payload = {
        "config": rc.describe(),
        "box": [list(p) for p in rc.box],
        "grid_points": rc.grid_points,
        "refine": rc.refine,
        "best_F": res.best_F.tolist(),
        "best_objective": res.best_objective,
        "verdict": res.verdict.value,
        "evaluation_count": res.evaluation_count,
        "grid_best_F": res.grid_best_F.tolist(),
        "grid_best_objective": res.grid_best_objective,
        "anomalous": res.anomalous,
        "stable": [{"F": F.tolist(), "objective": v} for F, v in res.stable],
    }
    path = None
    if rc.out:
        os.makedirs(rc.out, exist_ok=True)
        path = os.path.join(rc.out, "search.json")
        _write_metadata(rc.out, "search-gain", argv)
    print(_dump(payload, path))
    return EXIT_CODES[res.verdict]


def cmd_verify_paper(steps_per_period=4000, stream=None):
    stream = stream or sys.stdout
    rows = run_all(IntegratorConfig(steps_per_period))
    header = f"{'crit':<5}{'check':<48}{'result':<7}expected | got | tol"
    print(header, file=stream)
    print("-" * len(header), file=stream)
    for r in rows:
        print(f"{r.criterion:<5}{r.name[:47]:<48}{'PASS' if r.passed else 'FAIL':<7}"
              f"{r.expected} | {r.got} | {r.tolerance}", file=stream)
    n_pass = sum(r.passed for r in rows)
    print(f"{n_pass}/{len(rows)} checks passed", file=stream)
    return 0 if n_pass == len(rows) else 1


def _build_parser():
    p = _Parser(prog="floquet-aaw", description="Act-and-wait delayed feedback analysis")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--example", default="ex41", help=f"one of {', '.join(example_names())}")
        sp.add_argument("--gain", help="gain entries, row-major, comma-separated")
        sp.add_argument("--schedule", help="w,a,d in whole periods")
        sp.add_argument("--steps-per-period", type=int, default=4000)
        sp.add_argument("--tol-unit", type=float, default=TOL_UNIT)
        sp.add_argument("--tol-margin", type=float, default=TOL_MARGIN)
        sp.add_argument("--out", help="output directory")

    common(sub.add_parser("analyze", help="monodromy matrix and stability verdict"))
    sp = sub.add_parser("simulate", help="closed-loop trajectory CSV and limit JSON")
    common(sp)
    sp.add_argument("--x0", help="initial state, comma-separated")
    sp.add_argument("--cycles", type=int, default=30)
    sp = sub.add_parser("search-gain", help="grid + simplex search for a stabilizing gain")
    common(sp)
    sp.add_argument("--box", help="lo:hi per gain entry, row-major, comma-separated")
    sp.add_argument("--grid-points", type=int, default=21)
    sp.add_argument("--no-refine", action="store_true")
    sp = sub.add_parser("verify-paper", help="run the reproduction checks")
    sp.add_argument("--steps-per-period", type=int, default=4000)
    return p


def _join_negative_values(argv):
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _build_parser().parse_args(_join_negative_values(argv))
    try:
        if args.command == "verify-paper":
            if args.steps_per_period < 2 or args.steps_per_period % 2:
                raise ConfigError("--steps-per-period must be an even integer >= 2")
            return cmd_verify_paper(args.steps_per_period)
        rc = RunConfig.from_args(args)
        handler = {"analyze": cmd_analyze, "simulate": cmd_simulate,
                   "search-gain": cmd_search_gain}[args.command]
        return handler(rc, argv)
    except ConfigError as exc:
        print(f"floquet-aaw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"floquet-aaw: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"floquet-aaw: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
