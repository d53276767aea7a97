"""Dense-output (Galerkin curve) error sweeps: global, single-step and velocity errors."""
import argparse
from pathlib import Path

from galerkin_vi.analysis import StudyConfig, curve_error_study
from galerkin_vi.analysis.report import emit_report

SCHEMES = [(1, "gauss:1"), (2, "gauss:2"), (2, "lobatto:2"), (3, "gauss:3")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/curve")
    ap.add_argument("--system", default="harmonic_oscillator")
    ap.add_argument("--dense", type=int, default=16)
    args = ap.parse_args()
    out = Path(args.out)
    for s, rule in SCHEMES:
        rep = curve_error_study(StudyConfig(system=args.system, degree=s, quadrature=rule, dense=args.dense))
        stem = f"{args.system}_s{s}_{rule.replace(':', '')}"
        emit_report(rep, "csv", out / f"{stem}.csv")
        emit_report(rep, "svg", out / f"{stem}.svg")
        print(rep.summary())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
