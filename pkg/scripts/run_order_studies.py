"""Mesh-error and discrete-Lagrangian order sweeps for the standard scheme table.

Writes one CSV and one SVG per (system, scheme) into the output directory.
"""
import argparse
from pathlib import Path

from galerkin_vi.analysis import StudyConfig, lagrangian_error_study, mesh_error_study
from galerkin_vi.analysis.report import emit_report

SCHEMES = [(1, "gauss:1"), (2, "gauss:2"), (2, "lobatto:2"), (3, "gauss:3")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/orders")
    ap.add_argument("--systems", nargs="+", default=["harmonic_oscillator", "pendulum"])
    args = ap.parse_args()
    out = Path(args.out)
    ok = True
    for system in args.systems:
        for s, rule in SCHEMES:
            metrics = ("mesh", "lagrangian") if system == "harmonic_oscillator" else ("mesh",)
            rep = mesh_error_study(StudyConfig(system=system, degree=s, quadrature=rule, metrics=metrics))
            stem = f"{system}_s{s}_{rule.replace(':', '')}"
            emit_report(rep, "csv", out / f"{stem}.csv")
            emit_report(rep, "svg", out / f"{stem}.svg")
            print(rep.summary())
            ok &= rep.passed
    if "pendulum" in args.systems:
        rep = lagrangian_error_study(StudyConfig(system="pendulum", degree=1, quadrature="gauss:1",
                                                 h_values=(0.2, 0.1, 0.05, 0.025)))
        print(rep.summary())
    return 0 if ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
