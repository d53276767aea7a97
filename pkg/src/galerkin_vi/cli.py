"""
Command-line entry point.

Exit codes: 0 when every expected slope (or conservation check) is met,
2 on a slope deviation beyond tolerance, 1 on a runtime error.
"""
import argparse
import csv
import dataclasses
import sys

import numpy as np

from .analysis.config import load_config, parse_params
from .analysis.report import emit_report
from .analysis.studies import (StudyConfig, curve_error_study, energy_drift_study, forced_order_study,
                               mesh_error_study)
from .errors import GalerkinError, OrderMismatch
from .galerkin import StepState, forced_step, integrate_trajectory, make_scheme
from .mechanics import NewtonConfig, hamiltonian, make_system, momentum
from .polynomials import eval_segment
from .quadrature import MAX_POINTS, empirical_order, gauss_legendre, gauss_lobatto, parse_rule

EXIT_OK, EXIT_ERROR, EXIT_DEVIATION = 0, 1, 2


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _scheme_args(p):
    p.add_argument("--system", help="built-in system label (default harmonic_oscillator)")
    p.add_argument("--param", action="append", default=None, metavar="NAME=VALUE",
                   help="system parameter, repeatable")
    p.add_argument("--degree", type=int, help="polynomial degree s")
    p.add_argument("--grid", help="lobatto | chebyshev-lobatto | equispaced")
    p.add_argument("--quadrature", help="gauss:<r> or lobatto:<r>")
    p.add_argument("--q0", type=_floats, help="initial position, comma separated")
    p.add_argument("--p0", type=_floats, help="initial momentum, comma separated")
    p.add_argument("--tol", type=float, dest="newton_tol", help="Newton residual tolerance")


def _study_args(p):
    _scheme_args(p)
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--h", type=_floats, dest="h_values", help="step sizes, comma separated, decreasing")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--dense", type=int, help="dense samples per step")
    p.add_argument("--steps", type=int, help="step count for the energy study")
    p.add_argument("--metrics", type=lambda s: tuple(s.replace(",", " ").split()))
    p.add_argument("--csv", dest="csv_path")
    p.add_argument("--svg", dest="svg_path")


def build_parser():
    parser = argparse.ArgumentParser(prog="galerkin-vi", description="Galerkin variational integrators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("order-study", "mesh-point convergence order"),
                       ("curve-study", "dense-output (Galerkin curve) convergence"),
                       ("energy-study", "long-time energy behaviour"),
                       ("forced-study", "convergence order of the forced integrator")]:
        _study_args(sub.add_parser(name, help=text))
    q = sub.add_parser("quadrature-check", help="verify declared orders of quadrature rules")
    q.add_argument("--quadrature", help="check one rule only")
    for name, text in [("step", "take one step and print the new state"),
                       ("integrate", "integrate and write t, q, p, H as CSV")]:
        p = sub.add_parser(name, help=text)
        _scheme_args(p)
        p.add_argument("--h", type=float, default=0.1)
        p.add_argument("--steps", type=int, default=100 if name == "integrate" else 1)
        p.add_argument("--dense", type=int, default=0, help="extra dense samples per step")
        p.add_argument("--csv", dest="csv_path", help="output file (default stdout)")
    return parser


def study_config(args, defaults=None):
    """StudyConfig from defaults, then an optional config file, then explicit flags."""
    values = dict(defaults or {})
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    fields = {f.name for f in dataclasses.fields(StudyConfig)}
    for key, value in vars(args).items():
        if key in fields and value is not None:
            values[key] = value
    if args.param:
        values["params"] = {**values.get("params", {}), **parse_params(args.param)}
    if "q0" in values and "p0" not in values:
        values["p0"] = (0.0,) * len(values["q0"])
    return StudyConfig(**values)


def _emit(report, cfg):
    if cfg.csv_path:
        emit_report(report, "csv", cfg.csv_path)
    if cfg.svg_path:
        emit_report(report, "svg", cfg.svg_path)


def _run_study(fn, args, defaults=None):
    cfg = study_config(args, defaults)
    report = fn(cfg)
    print(report.summary())
    _emit(report, cfg)
    return EXIT_OK if report.passed else EXIT_DEVIATION


def _energy(args):
    cfg = study_config(args)
    h = cfg.h_values[0] if args.h_values else 0.1
    report = energy_drift_study(cfg, h=h)
    print(report.summary())
    if cfg.csv_path:
        _write_rows(cfg.csv_path, ["step", "dH"], report.rows)
    return EXIT_OK if report.passed else EXIT_DEVIATION


def _quadrature_check(args):
    if args.quadrature:
        rules = [parse_rule(args.quadrature)]
    else:
        rules = [gauss_legendre(r) for r in range(1, MAX_POINTS + 1)]
        rules += [gauss_lobatto(r) for r in range(2, MAX_POINTS + 1)]
    status = EXIT_OK
    for rule in rules:
        found = empirical_order(rule)
        ok = found == rule.order
        status = status if ok else EXIT_DEVIATION
        print(f"{rule.label:12s} declared {rule.order:3d} verified {found:3d} {'ok' if ok else 'MISMATCH'}")
    return status


def _scheme_and_state(args):
    cfg = NewtonConfig(tolerance=args.newton_tol or 1e-12)
    system = make_system(args.system or "harmonic_oscillator", **parse_params(args.param or []))
    scheme = make_scheme(args.degree or 2, args.quadrature or "gauss:2", args.grid or "lobatto")
    q0 = args.q0 if args.q0 is not None else (1.0,) * system.dim
    p0 = args.p0 if args.p0 is not None else (0.0,) * system.dim
    return cfg, system, scheme, StepState(q0, p0)


def _step(args):
    if args.steps < 1:
        raise ValueError("--steps must be at least 1")
    cfg, system, scheme, state = _scheme_and_state(args)
    for _ in range(args.steps):
        res = forced_step(scheme, system, state, args.h, cfg)
        state = res.state
    print(f"t = {state.t!r}")
    print("q = " + " ".join(repr(float(v)) for v in state.q))
    print("p = " + " ".join(repr(float(v)) for v in state.p))
    print(f"newton iterations = {res.newton_iterations}, residual = {res.residual:.3e}")
    return EXIT_OK


def _integrate(args):
    if args.steps < 0 or args.dense < 0:
        raise ValueError("--steps and --dense must be non-negative")
    cfg, system, scheme, state = _scheme_and_state(args)
    traj = integrate_trajectory(scheme, system, state, args.h, args.steps, cfg, keep_segments=args.dense > 0)
    n = system.dim
    header = ["t"] + [f"q{i}" for i in range(n)] + [f"p{i}" for i in range(n)] + ["H"]
    rows = []
    for k, (t, q, p) in enumerate(zip(traj.times, traj.q, traj.p)):
        rows.append([t, *q, *p, hamiltonian(system, q, p, cfg)])
        if args.dense > 0 and k < len(traj.segments):
            seg = traj.segments[k]
            for j in range(1, args.dense + 1):
                td = seg.t_start + seg.h * j / (args.dense + 1)
                qd, vd = eval_segment(seg, td)
                pd = momentum(system, qd, vd)
                rows.append([td, *qd, *pd, hamiltonian(system, qd, pd, cfg)])
    _write_rows(args.csv_path, header, rows)
    return EXIT_OK


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    finally:
        if path:
            fh.close()


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "order-study": lambda a: _run_study(mesh_error_study, a),
        "curve-study": lambda a: _run_study(curve_error_study, a),
        "energy-study": _energy,
        "forced-study": lambda a: _run_study(forced_order_study, a, {"system": "damped_oscillator"}),
        "quadrature-check": _quadrature_check,
        "step": _step,
        "integrate": _integrate,
    }
    try:
        return handlers[args.command](args)
    except OrderMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEVIATION
    except (GalerkinError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
