"""Order sweep of the forced integrator on the damped oscillator."""
import argparse
from pathlib import Path

from galerkin_vi.analysis import StudyConfig, forced_order_study
from galerkin_vi.analysis.report import emit_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/forced")
    ap.add_argument("--gamma", type=float, default=0.1)
    args = ap.parse_args()
    out = Path(args.out)
    for s in (1, 2, 3):
        cfg = StudyConfig(system="damped_oscillator", params={"gamma": args.gamma}, degree=s, quadrature=f"gauss:{s}")
        rep = forced_order_study(cfg)
        emit_report(rep, "csv", out / f"damped_s{s}.csv")
        emit_report(rep, "svg", out / f"damped_s{s}.svg")
        print(rep.summary())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
