"""
Reference solutions and the exact-discrete-Lagrangian oracle.

Systems with a closed-form flow use it directly. Everything else is
integrated with a fine s=4 / Gauss-5 Galerkin scheme (order 8); values
between reference mesh points come from one extra partial step, not from the
dense curve, so they keep the full order.
"""
import math

import numpy as np

from ..errors import ShootingDivergence
from ..galerkin import StepState, forced_step, integrate_trajectory, make_scheme
from ..mechanics import NewtonConfig, velocity_from_momentum
from ..quadrature import gauss_legendre

H_REF = 1e-2
EPS = np.finfo(float).eps
_REF_SCHEME = make_scheme(4, "gauss:5")
_REF_CFG = NewtonConfig(tolerance=1e-14)


class ReferenceTrajectory:
    """Accurate solution of the (forced) Euler-Lagrange equation from (q0, p0).

    ``align`` makes the fine step an integer divisor of that value so that
    study mesh points coincide with reference mesh points.
    """

    def __init__(self, system, q0, p0, t_end, h_ref=H_REF, align=None, t0=0.0):
        self.system = system
        self.q0 = np.atleast_1d(np.asarray(q0, dtype=float))
        self.p0 = np.atleast_1d(np.asarray(p0, dtype=float))
        self.t0 = t0
        self.t_end = t_end
        self.exact = system.exact_flow is not None
        scale = max(1.0, np.max(np.abs(self.q0)), np.max(np.abs(self.p0)))
        if self.exact:
            self.h = None
            self.floor = 4 * EPS * scale
            return
        span = t_end - t0
        if align is not None:
            self.h = align / math.ceil(align / h_ref - 1e-9)
        else:
            self.h = span / max(1, math.ceil(span / h_ref - 1e-9))
        steps = max(1, math.ceil(span / self.h - 1e-9))
        self.traj = integrate_trajectory(_REF_SCHEME, system, StepState(self.q0, self.p0, t0),
                                         self.h, steps, _REF_CFG, keep_segments=False)
        scale = max(scale, np.max(np.abs(self.traj.q)), np.max(np.abs(self.traj.p)))
        self.floor = float(np.sqrt(np.sum(self.traj.residuals ** 2) + steps * (EPS * scale) ** 2))

    def at(self, t):
        """(q, p) at a single time t."""
        if self.exact:
            q, p = self.system.exact_flow(self.q0, self.p0, t - self.t0)
            return np.atleast_1d(q).astype(float), np.atleast_1d(p).astype(float)
        x = (t - self.t0) / self.h
        k = int(min(max(round(x), 0), len(self.traj.times) - 1))
        if abs(x - k) > 1e-9:
            k = int(min(max(math.floor(x), 0), len(self.traj.times) - 1))
        q, p, tk = self.traj.q[k], self.traj.p[k], self.traj.times[k]
        dt = t - tk
        if abs(dt) <= 1e-12 * max(1.0, abs(t)):
            return q.copy(), p.copy()
        state = StepState(q, p, tk)
        if dt < 0:
            raise ValueError("reference queried before its start time")
        res = forced_step(_REF_SCHEME, self.system, state, dt, _REF_CFG)
        return res.state.q, res.state.p

    def states(self, times):
        out = [self.at(t) for t in np.atleast_1d(times)]
        return np.array([a for a, _ in out]), np.array([b for _, b in out])


def reference_solution(system, q0, p0, t, h_ref=H_REF):
    """(q, p) at time t starting from (q0, p0) at time 0."""
    if t < 0:
        raise ValueError("reference time must be non-negative")
    if t == 0:
        return np.atleast_1d(np.asarray(q0, float)).copy(), np.atleast_1d(np.asarray(p0, float)).copy()
    return ReferenceTrajectory(system, q0, p0, t, h_ref).at(t)


_ACTION_RULE = gauss_legendre(5)


def action_along(system, ref, h, pieces=64):
    """Continuous action of the reference solution over [t0, t0 + h]."""
    width = h / pieces
    starts = ref.t0 + width * np.arange(pieces)
    total = 0.0
    for a in starts:
        for c, b in zip(_ACTION_RULE.points, _ACTION_RULE.weights):
            q, p = ref.at(a + width * c)
            v = velocity_from_momentum(system, q, p, _REF_CFG)
            total += width * b * float(system.lagrangian(q, v))
    return total


def shoot_momentum(system, q0, q1, h, h_ref=H_REF, tol=1e-13, max_iter=30):
    """Initial momentum whose trajectory reaches q1 at time h."""
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    q1 = np.atleast_1d(np.asarray(q1, dtype=float))
    n = q0.size
    p = np.atleast_1d(system.grad_v(q0, (q1 - q0) / h)).astype(float)

    def endpoint(p_):
        return reference_solution(system, q0, p_, h, h_ref)[0]

    miss = endpoint(p) - q1
    scale = max(1.0, np.max(np.abs(q1)))
    for _ in range(max_iter):
        if np.max(np.abs(miss)) <= tol * scale:
            return p
        J = np.empty((n, n))
        for c in range(n):
            dp = np.zeros(n)
            dp[c] = 1e-6 * max(1.0, abs(p[c]))
            J[:, c] = (endpoint(p + dp) - endpoint(p - dp)) / (2 * dp[c])
        try:
            p = p - np.linalg.solve(J, miss)
        except np.linalg.LinAlgError as exc:
            raise ShootingDivergence("singular shooting Jacobian") from exc
        new_miss = endpoint(p) - q1
        if not np.all(np.isfinite(new_miss)):
            raise ShootingDivergence("shooting produced non-finite endpoint")
        if np.max(np.abs(new_miss)) >= np.max(np.abs(miss)) and np.max(np.abs(new_miss)) <= 1e3 * tol * scale:
            return p  # stalled at roundoff
        miss = new_miss
    raise ShootingDivergence(f"boundary miss {np.max(np.abs(miss)):.3e} after {max_iter} iterations")


def exact_discrete_lagrangian_oracle(system, q0, q1, h, h_ref=H_REF, pieces=64):
    """Action of the Euler-Lagrange solution joining q0 (t=0) to q1 (t=h)."""
    p0 = shoot_momentum(system, q0, q1, h, h_ref)
    ref = ReferenceTrajectory(system, q0, p0, h, h_ref=min(h_ref, h / pieces))
    return action_along(system, ref, h, pieces)


def harmonic_action(q0, q1, h, m=1.0, k=1.0):
    """Closed-form minimal action of the harmonic oscillator between q0 and q1."""
    w = math.sqrt(k / m)
    q0 = float(np.ravel(q0)[0])
    q1 = float(np.ravel(q1)[0])
    # (q0^2 + q1^2) cos wh - 2 q0 q1 rewritten without the O(h^2) cancellation
    num = (q1 - q0) ** 2 * math.cos(w * h) - 4.0 * q0 * q1 * math.sin(0.5 * w * h) ** 2
    return m * w * num / (2.0 * math.sin(w * h))
