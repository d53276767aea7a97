"""
Convergence and conservation studies.

Each study builds its scheme and system from a `StudyConfig`, sweeps the step
sizes, and returns a report whose slopes are compared against the orders the
theory predicts: min(2s, u) at mesh points, min(s, u/2) + 1 for the curve
over one step, and min(2s, u) + 1 for the discrete Lagrangian itself.
"""
from dataclasses import dataclass, field

import numpy as np

from ..galerkin import StepState, discrete_lagrangian, integrate_trajectory, make_scheme
from ..mechanics import NewtonConfig, hamiltonian, make_system, velocity_from_momentum
from ..polynomials import eval_segment
from .orders import FLOOR_FACTOR, ConvergenceReport
from .reference import EPS, H_REF, ReferenceTrajectory, exact_discrete_lagrangian_oracle, harmonic_action

DEFAULT_H = (0.2, 0.1, 0.05, 0.025, 0.0125)
METRICS = ("mesh", "curve", "energy", "forced", "lagrangian")

MESH_TOL = 0.25
CURVE_TOL = 0.35
LAGRANGIAN_TOL = 0.3
_FINE = NewtonConfig(tolerance=1e-14)


@dataclass
class StudyConfig:
    system: str = "harmonic_oscillator"
    params: dict = field(default_factory=dict)
    degree: int = 2
    grid: str = "lobatto"
    quadrature: str = "gauss:2"
    h_values: tuple = DEFAULT_H
    t_end: float = 1.0
    q0: tuple = (1.0,)
    p0: tuple = (0.5,)
    metrics: tuple = ("mesh",)
    csv_path: str = None
    svg_path: str = None
    dense: int = 16
    steps: int = 10000
    h_ref: float = H_REF
    floor_factor: float = FLOOR_FACTOR
    newton_tol: float = 1e-12

    def __post_init__(self):
        self.h_values = tuple(float(h) for h in self.h_values)
        self.q0 = tuple(float(x) for x in np.atleast_1d(self.q0))
        self.p0 = tuple(float(x) for x in np.atleast_1d(self.p0))
        self.metrics = tuple(self.metrics)
        self.validate()

    def validate(self):
        hs = self.h_values
        if not hs or any(h <= 0 for h in hs):
            raise ValueError("h_values must be positive")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("h_values must be strictly decreasing")
        for h in hs:
            n = self.t_end / h
            if abs(n - round(n)) > 1e-12 * max(1.0, round(n)):
                raise ValueError(f"h={h} does not divide t_end={self.t_end}")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}")
        if len(self.q0) != len(self.p0):
            raise ValueError("q0 and p0 must have the same dimension")

    def make_system(self):
        return make_system(self.system, **self.params)

    def make_scheme(self):
        return make_scheme(self.degree, self.quadrature, self.grid)

    def newton(self):
        return NewtonConfig(tolerance=self.newton_tol)

    def steps_for(self, h):
        return int(round(self.t_end / h))


def _setup(cfg):
    system = cfg.make_system()
    scheme = cfg.make_scheme()
    if len(cfg.q0) != system.dim:
        raise ValueError(f"{system.label} has dimension {system.dim}, initial state has {len(cfg.q0)}")
    ref = ReferenceTrajectory(system, cfg.q0, cfg.p0, cfg.t_end, cfg.h_ref, align=min(cfg.h_values))
    return system, scheme, ref


def _label(cfg, kind, scheme):
    return f"{kind}: {cfg.system} s={scheme.s} grid={scheme.grid.kind} rule={scheme.rule.label} (u={scheme.rule.order})"


def _trajectory_floor(traj, ref_floor):
    """Random-walk estimate of accumulated roundoff and Newton residual."""
    scale = max(1.0, np.max(np.abs(traj.q)), np.max(np.abs(traj.p)))
    n = len(traj.residuals)
    return float(np.sqrt(np.sum(traj.residuals ** 2) + n * (EPS * scale) ** 2)) + ref_floor


def _mesh_errors(cfg, system, scheme, ref):
    errors, floors = [], []
    state = StepState(cfg.q0, cfg.p0)
    for h in cfg.h_values:
        traj = integrate_trajectory(scheme, system, state, h, cfg.steps_for(h), cfg.newton(), keep_segments=False)
        worst = 0.0
        for t, q, p in zip(traj.times, traj.q, traj.p):
            qr, pr = ref.at(t)
            worst = max(worst, float(np.sqrt(np.sum((q - qr) ** 2) + np.sum((p - pr) ** 2))))
        errors.append(worst)
        floors.append(_trajectory_floor(traj, ref.floor))
    return errors, floors


def mesh_error_study(cfg):
    """Sup over mesh points of the phase-space error; slope vs min(2s, u)."""
    system, scheme, ref = _setup(cfg)
    report = ConvergenceReport(_label(cfg, "mesh", scheme), list(cfg.h_values), factor=cfg.floor_factor)
    errors, floors = _mesh_errors(cfg, system, scheme, ref)
    report.add("mesh", errors, floors, scheme.order, MESH_TOL)
    if "lagrangian" in cfg.metrics:
        _add_lagrangian(report, cfg, system, scheme)
    return report


def _dense_errors(cfg, system, scheme, ref, h, traj):
    taus = np.linspace(0.0, 1.0, cfg.dense + 1)
    glob_q = glob_v = local_q = 0.0
    for k, seg in enumerate(traj.segments):
        times = seg.t_start + seg.h * taus
        q, qdot = eval_segment(seg, times)
        for j, t in enumerate(times):
            qr, pr = ref.at(t)
            eq = float(np.linalg.norm(q[j] - qr))
            glob_q = max(glob_q, eq)
            if k == 0:
                local_q = max(local_q, eq)
            vr = velocity_from_momentum(system, qr, pr, _FINE)
            glob_v = max(glob_v, float(np.linalg.norm(qdot[j] - vr)))
    return glob_q, glob_v, local_q


def curve_error_study(cfg):
    """Dense-output errors of the Galerkin curves.

    * ``curve``: global sup of |q~(t) - q(t)| over all steps, compared with s;
    * ``curve_local``: sup over the first step only, compared with min(s, u/2) + 1;
    * ``curve_velocity``: global sup of the velocity error, reported for comparison with s.
    """
    if cfg.dense < 16:
        raise ValueError("curve study needs at least 16 dense samples per step")
    system, scheme, ref = _setup(cfg)
    s, u = scheme.s, scheme.rule.order
    report = ConvergenceReport(_label(cfg, "curve", scheme), list(cfg.h_values), factor=cfg.floor_factor)
    g_q, g_v, l_q, floors = [], [], [], []
    state = StepState(cfg.q0, cfg.p0)
    for h in cfg.h_values:
        traj = integrate_trajectory(scheme, system, state, h, cfg.steps_for(h), cfg.newton())
        a, b, c = _dense_errors(cfg, system, scheme, ref, h, traj)
        g_q.append(a)
        g_v.append(b)
        l_q.append(c)
        floors.append(_trajectory_floor(traj, ref.floor))
    report.add("curve", g_q, floors, s, CURVE_TOL)
    report.add("curve_local", l_q, [ref.floor] * len(l_q), min(s, u / 2) + 1, CURVE_TOL)
    report.add("curve_velocity", g_v, floors, s, CURVE_TOL, informational=True)
    mesh = report.metrics.get("mesh")
    if mesh is None and "mesh" in cfg.metrics:
        errors, mfloors = _mesh_errors(cfg, system, scheme, ref)
        report.add("mesh", errors, mfloors, scheme.order, MESH_TOL)
    return report


def _add_lagrangian(report, cfg, system, scheme):
    """|L_d - L_exact| along the reference solution; slope vs min(2s, u) + 1."""
    errors = []
    closed_form = system.label == "harmonic_oscillator"
    for h in cfg.h_values:
        ref = ReferenceTrajectory(system, cfg.q0, cfg.p0, h, cfg.h_ref)
        q1, _ = ref.at(h)
        Ld = discrete_lagrangian(scheme, system, np.array(cfg.q0), q1, h, cfg.newton())
        if closed_form:
            exact = harmonic_action(cfg.q0, q1, h, **system.params)
        else:
            exact = exact_discrete_lagrangian_oracle(system, np.array(cfg.q0), q1, h, cfg.h_ref)
        errors.append(abs(Ld - exact))
    # both actions are sums of O(h) terms, so roundoff is relative to h
    scale = max(1.0, float(np.max(np.abs(cfg.q0))), float(np.max(np.abs(cfg.p0)))) ** 2
    floors = [16 * EPS * h * scale for h in cfg.h_values]
    report.add("lagrangian", errors, floors, scheme.order + 1, LAGRANGIAN_TOL,
               note="closed-form oracle" if closed_form else "shooting oracle")


def lagrangian_error_study(cfg):
    system = cfg.make_system()
    scheme = cfg.make_scheme()
    report = ConvergenceReport(_label(cfg, "lagrangian", scheme), list(cfg.h_values), factor=cfg.floor_factor)
    _add_lagrangian(report, cfg, system, scheme)
    return report


@dataclass
class EnergyReport:
    label: str
    steps: np.ndarray
    deviation: np.ndarray
    first_decile: float
    last_decile: float
    slack: float = 1e-13

    @property
    def rows(self):
        return list(zip(self.steps.tolist(), self.deviation.tolist()))

    @property
    def passed(self):
        """No secular drift: last-decile max |dH| within twice the first-decile max."""
        return self.last_decile <= 2.0 * self.first_decile + self.slack

    def summary(self):
        flag = "ok" if self.passed else "DRIFT"
        return (f"{self.label}\n  max|dH| first decile {self.first_decile:.3e}, "
                f"last decile {self.last_decile:.3e} [{flag}]")


def energy_drift_study(cfg, h=None, steps=None):
    system = cfg.make_system()
    if system.is_forced:
        raise ValueError("energy drift study needs a conservative system")
    scheme = cfg.make_scheme()
    h = cfg.h_values[0] if h is None else h
    steps = cfg.steps if steps is None else steps
    newton = cfg.newton()
    traj = integrate_trajectory(scheme, system, StepState(cfg.q0, cfg.p0), h, steps, newton, keep_segments=False)
    H = np.array([hamiltonian(system, q, p, newton) for q, p in zip(traj.q, traj.p)])
    dH = H - H[0]
    decile = max(1, (steps + 1) // 10)
    first = float(np.max(np.abs(dH[:decile])))
    last = float(np.max(np.abs(dH[-decile:])))
    label = _label(cfg, "energy", scheme) + f" h={h} steps={steps}"
    return EnergyReport(label, np.arange(steps + 1), dH, first, last)


def forced_order_study(cfg):
    """Mesh-error slope of the forced integrator.

    The provable global order is s (local defect O(h^(s+1))); the conjectured
    one is min(2s, u). The report checks the provable bound and notes which
    of the two the data supports.
    """
    system, scheme, ref = _setup(cfg)
    s = scheme.s
    conjectured = scheme.order
    report = ConvergenceReport(_label(cfg, "forced", scheme), list(cfg.h_values), factor=cfg.floor_factor)
    errors, floors = _mesh_errors(cfg, system, scheme, ref)
    m = report.add("forced", errors, floors, s, MESH_TOL, mode="at_least")
    if abs(m.slope - conjectured) <= MESH_TOL:
        verdict = f"data supports the conjectured order {conjectured}"
    elif m.slope >= s - MESH_TOL:
        verdict = f"data supports only the provable order {s} (conjectured {conjectured})"
    else:
        verdict = f"slope below the provable order {s}"
    report.notes.append(f"provable order {s}, conjectured order {conjectured}: {verdict}")
    if not system.is_forced:
        report.notes.append("system has no force; forced step reduces to the conservative step")
    return report


def expected_dense_orders(s, u):
    return {"curve": s, "curve_local": min(s, u / 2) + 1, "mesh": min(2 * s, u)}
