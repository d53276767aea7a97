"""Long-time energy behaviour of the pendulum and Kepler angular momentum."""
import argparse
import csv
from pathlib import Path

import numpy as np

from galerkin_vi.analysis import StudyConfig, energy_drift_study
from galerkin_vi.galerkin import StepState, integrate_trajectory, make_scheme
from galerkin_vi.mechanics import NewtonConfig, angular_momentum, make_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/energy")
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--h", type=float, default=0.1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = energy_drift_study(StudyConfig(system="pendulum", degree=2, quadrature="gauss:2"), h=args.h,
                             steps=args.steps)
    print(rep.summary())
    with open(out / "pendulum_energy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "dH"])
        w.writerows(rep.rows)
    traj = integrate_trajectory(make_scheme(2, "gauss:2"), make_system("kepler"), StepState([1.0, 0.0], [0.0, 1.2]),
                                0.01, 1000, NewtonConfig(tolerance=1e-14), keep_segments=False)
    ell = np.array([angular_momentum(q, p) for q, p in zip(traj.q, traj.p)])
    print(f"kepler angular momentum: max drift {np.max(np.abs(ell - ell[0])):.2e} over 1000 steps")
    return 0 if rep.passed else 2


if __name__ == "__main__":
    raise SystemExit(main())
