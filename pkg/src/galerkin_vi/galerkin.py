"""
Galerkin variational integrators.

A step is parameterized by the values ``Q[j] = q(t + h d_j)`` of a degree-s
polynomial. The internal action ``h sum_i b_i L(q(h c_i), qdot(h c_i))`` and
its first two derivatives in ``Q`` are assembled from the basis matrices
``B[i, j] = l_j(c_i)`` and ``D[i, j] = l_j'(c_i)``.

Node-value arrays have shape ``(s + 1, n)``; Hessians are returned both as
``(s+1, n, s+1, n)`` tensors internally and flattened for the public API.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DegenerateHessian, NewtonDivergence
from .mechanics import NewtonConfig, velocity_from_momentum
from .polynomials import CurveSegment, basis_derivatives, basis_values, make_grid
from .quadrature import parse_rule


@dataclass(frozen=True, eq=False)
class GalerkinScheme:
    grid: object
    rule: object

    @property
    def s(self):
        return self.grid.s

    @property
    def order(self):
        """Predicted mesh-point order min(2s, u)."""
        return min(2 * self.s, self.rule.order)

    @cached_property
    def basis_at_nodes(self):
        return basis_values(self.grid, self.rule.points)

    @cached_property
    def dbasis_at_nodes(self):
        return basis_derivatives(self.grid, self.rule.points)

    @cached_property
    def _weighted(self):
        b, B, D = self.rule.weights, self.basis_at_nodes, self.dbasis_at_nodes
        return (
            np.einsum("i,ik,il->ikl", b, B, B),
            np.einsum("i,ik,il->ikl", b, B, D),
            np.einsum("i,ik,il->ikl", b, D, B),
            np.einsum("i,ik,il->ikl", b, D, D),
        )

    def __repr__(self):
        return f"GalerkinScheme(s={self.s}, grid={self.grid.kind}, rule={self.rule.label})"


def make_scheme(s, rule="gauss:2", grid="lobatto"):
    if isinstance(rule, str):
        rule = parse_rule(rule)
    return GalerkinScheme(make_grid(s, grid), rule)


@dataclass(frozen=True)
class StepState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        p = np.atleast_1d(np.asarray(self.p, dtype=float)).copy()
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("state contains non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass
class StepResult:
    state: StepState
    segment: CurveSegment
    newton_iterations: int
    residual: float
    minimizer: Optional[bool] = None


# ---------------------------------------------------------------------------
# internal action and derivatives
#
# Private helpers work with a base point and offsets X = Q - Q[0]. Velocities
# D X / h then carry no O(eps |q| / h) cancellation error, which otherwise
# puts a floor under the stage residual at small h.


def _curve(scheme, base, X, h):
    return base + scheme.basis_at_nodes @ X, scheme.dbasis_at_nodes @ X / h


def _as_nodes(scheme, node_values):
    Q = np.asarray(node_values, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape[0] != scheme.s + 1:
        raise ValueError(f"expected {scheme.s + 1} node values, got shape {Q.shape}")
    return Q


def _split(scheme, node_values):
    Q = _as_nodes(scheme, node_values)
    return Q[0].copy(), Q - Q[0]


def internal_action(scheme, system, node_values, h):
    base, X = _split(scheme, node_values)
    q, v = _curve(scheme, base, X, h)
    return float(h * scheme.rule.weights @ system.lagrangian(q, v))


def _gradient(scheme, system, base, X, h):
    q, v = _curve(scheme, base, X, h)
    b = scheme.rule.weights[:, None]
    return (h * scheme.basis_at_nodes.T @ (b * system.grad_q(q, v))
            + scheme.dbasis_at_nodes.T @ (b * system.grad_v(q, v)))


def internal_gradient(scheme, system, node_values, h):
    """d(internal action)/dQ, shape (s + 1, n)."""
    return _gradient(scheme, system, *_split(scheme, node_values), h)


def _hessian4(scheme, system, base, X, h):
    q, v = _curve(scheme, base, X, h)
    wbb, wbd, wdb, wdd = scheme._weighted
    lqv = system.hess_qv(q, v)
    return (h * np.einsum("ikl,iac->kalc", wbb, system.hess_qq(q, v))
            + np.einsum("ikl,iac->kalc", wbd, lqv)
            + np.einsum("ikl,ica->kalc", wdb, lqv)
            + np.einsum("ikl,iac->kalc", wdd, system.hess_vv(q, v)) / h)


def internal_hessian(scheme, system, node_values, h):
    """Second derivatives of the internal action, shape ((s+1) n, (s+1) n)."""
    base, X = _split(scheme, node_values)
    m = X.size
    return _hessian4(scheme, system, base, X, h).reshape(m, m)


def _force_work(scheme, system, base, X, h, t):
    """Virtual work of the force on each node, h sum_i b_i f_i l_k(c_i)."""
    q, v = _curve(scheme, base, X, h)
    f = system.total_force(q, v, t + h * scheme.rule.points)
    return h * scheme.basis_at_nodes.T @ (scheme.rule.weights[:, None] * f)


def _force_work_jac4(scheme, system, base, X, h):
    q, v = _curve(scheme, base, X, h)
    fq, fv = system.force_jacobians(q, v)
    wbb, wbd, _, _ = scheme._weighted
    return h * np.einsum("ikl,iac->kalc", wbb, fq) + np.einsum("ikl,iac->kalc", wbd, fv)


# ---------------------------------------------------------------------------
# Newton


def _solve_linear(J, r):
    try:
        dx = np.linalg.solve(J, r)
    except np.linalg.LinAlgError as exc:
        raise DegenerateHessian("singular Newton matrix in the stage solve") from exc
    if not np.all(np.isfinite(dx)):
        raise DegenerateHessian("non-finite Newton update in the stage solve")
    return dx


def _newton(fun, x0, cfg):
    """Solve fun(x) = 0 where fun returns (residual, jacobian)."""
    x = np.array(x0, dtype=float)
    r, J = fun(x)
    res = np.max(np.abs(r)) if r.size else 0.0
    it = 0
    while res > cfg.tolerance:
        if it >= cfg.max_iter:
            raise NewtonDivergence(f"residual {res:.3e} after {it} iterations")
        dx = _solve_linear(J, r)
        lam = 1.0
        while True:
            x_new = x - lam * dx
            r_new, J_new = fun(x_new)
            res_new = np.max(np.abs(r_new))
            if not cfg.line_search or (np.isfinite(res_new) and res_new < res) or lam < 1e-3:
                break
            lam *= 0.5
        if not np.isfinite(res_new):
            raise NewtonDivergence("non-finite residual in Newton iteration")
        x, r, J, res = x_new, r_new, J_new, res_new
        it += 1
    if cfg.polish and res > 1e-3 * cfg.tolerance:
        # one more quadratic-convergence step takes the residual to roundoff
        x_new = x - _solve_linear(J, r)
        r_new, _ = fun(x_new)
        res_new = np.max(np.abs(r_new))
        if res_new < res:
            x, res = x_new, res_new
            it += 1
    return x, it, float(res)


# ---------------------------------------------------------------------------
# stage solve and discrete Lagrangian


def _residual(scheme, system, base, X, h, t, forced):
    g = _gradient(scheme, system, base, X, h)
    H = _hessian4(scheme, system, base, X, h)
    if forced:
        g = g + _force_work(scheme, system, base, X, h, t)
        H = H + _force_work_jac4(scheme, system, base, X, h)
    return g, H


def _solve_interior_nodes(scheme, system, q0, qs, h, cfg, t=0.0, forced=None):
    _check_h(h)
    s = scheme.s
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    n = q0.size
    forced = system.is_forced if forced is None else forced
    X = scheme.grid.nodes[:, None] * (qs - q0)
    it, res = 0, 0.0
    if s > 1:
        m = (s - 1) * n

        def fun(x):
            X[1:s] = x.reshape(s - 1, n)
            g, H = _residual(scheme, system, q0, X, h, t, forced)
            return g[1:s].ravel(), H[1:s, :, 1:s, :].reshape(m, m)

        x, it, res = _newton(fun, X[1:s].ravel(), cfg)
        X[1:s] = x.reshape(s - 1, n)
    Q = q0 + X
    Q[-1] = qs
    return Q, it, res


def solve_interior(scheme, system, q0, qs, h, cfg=NewtonConfig(), t=0.0):
    """Interior node values q_1..q_{s-1} making the interior equations vanish.

    For a forced system the force's virtual work is included (Lagrange-d'Alembert
    interior equations); otherwise this is the stationary point of the internal action.
    """
    Q, _, _ = _solve_interior_nodes(scheme, system, q0, qs, h, cfg, t)
    return Q[1:-1]


def discrete_lagrangian(scheme, system, q0, qs, h, cfg=NewtonConfig(), t=0.0):
    Q, _, _ = _solve_interior_nodes(scheme, system, q0, qs, h, cfg, t)
    return internal_action(scheme, system, Q, h)


def boundary_momenta(scheme, system, node_values, h):
    """(p_minus, p_plus) = (-D1 L, D2 L) via the envelope theorem."""
    g = internal_gradient(scheme, system, node_values, h)
    return -g[0], g[-1]


def _interior_block(H4, s, n):
    return H4[1:s, :, 1:s, :].reshape((s - 1) * n, (s - 1) * n)


def is_minimizer(scheme, system, node_values, h):
    """True when the interior block of the internal Hessian is positive definite."""
    base, X = _split(scheme, node_values)
    s, n = scheme.s, X.shape[1]
    if s == 1:
        return True
    H = _interior_block(_hessian4(scheme, system, base, X, h), s, n)
    try:
        np.linalg.cholesky(0.5 * (H + H.T))
    except np.linalg.LinAlgError:
        return False
    return True


def discrete_forces(scheme, system, node_values, h, t=0.0):
    """Left/right discrete forces (F_minus, F_plus) for a solved forced segment.

    The sensitivity of the interior nodes to the boundary values comes from
    the implicit function theorem applied to the forced interior equations.
    """
    base, X = _split(scheme, node_values)
    s, n = scheme.s, X.shape[1]
    work = _force_work(scheme, system, base, X, h, t)
    if s == 1:
        return work[0], work[1]
    m = (s - 1) * n
    _, H = _residual(scheme, system, base, X, h, t, True)
    J_int = _interior_block(H, s, n)
    J_bnd = np.hstack([H[1:s, :, 0, :].reshape(m, n), H[1:s, :, s, :].reshape(m, n)])
    sens = -_solve_linear(J_int, J_bnd)
    interior = work[1:s].ravel()
    return work[0] + sens[:, :n].T @ interior, work[s] + sens[:, n:].T @ interior


# ---------------------------------------------------------------------------
# one-step maps


def initial_guess(scheme, system, state, h, cfg=NewtonConfig()):
    """Node values on the straight line q + t v, with v from the Legendre inverse."""
    v = velocity_from_momentum(system, state.q, state.p, cfg)
    return state.q + h * scheme.grid.nodes[:, None] * v


def _check_h(h):
    if not (np.isfinite(h) and h > 0):
        raise ValueError(f"step size must be positive, got {h}")


def _one_step(scheme, system, state, h, cfg, forced, guess):
    _check_h(h)
    s = scheme.s
    n = state.q.size
    if guess is None:
        guess = initial_guess(scheme, system, state, h, cfg)
    base = state.q
    X = np.asarray(guess, dtype=float).reshape(s + 1, n) - base
    X[0] = 0.0
    m = s * n

    def fun(x):
        X[1:] = x.reshape(s, n)
        g, H = _residual(scheme, system, base, X, h, state.t, forced)
        g[0] += state.p
        return g[:s].ravel(), H[:s, :, 1:, :].reshape(m, m)

    x, it, res = _newton(fun, X[1:].ravel(), cfg)
    X[1:] = x.reshape(s, n)
    g = _gradient(scheme, system, base, X, h)
    if forced:
        g = g + _force_work(scheme, system, base, X, h, state.t)
    Q = base + X
    new = StepState(Q[-1], g[-1], state.t + h)
    minimizer = is_minimizer(scheme, system, Q, h) if cfg.certify_minimizer else None
    return StepResult(new, CurveSegment(scheme.grid, Q, h, state.t), it, res, minimizer)


def step(scheme, system, state, h, cfg=NewtonConfig(), guess=None):
    """Symplectic one-step map (q, p) -> (q', p') for a conservative system."""
    if system.is_forced:
        raise ValueError(f"{system.label} carries a force; use forced_step")
    return _one_step(scheme, system, state, h, cfg, False, guess)


def forced_step(scheme, system, state, h, cfg=NewtonConfig(), guess=None):
    """Discrete Lagrange-d'Alembert step; reduces to `step` when the force is absent."""
    return _one_step(scheme, system, state, h, cfg, system.is_forced, guess)


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    segments: list = field(default_factory=list)


def integrate_trajectory(scheme, system, state, h, steps, cfg=NewtonConfig(), keep_segments=True):
    """Run ``steps`` steps, warm-starting each stage solve from the previous segment."""
    if not isinstance(state, StepState):
        state = StepState(*state)
    advance = forced_step if system.is_forced else step
    n = state.q.size
    times = np.empty(steps + 1)
    qs = np.empty((steps + 1, n))
    ps = np.empty((steps + 1, n))
    residuals = np.empty(steps)
    iterations = np.empty(steps, dtype=int)
    times[0], qs[0], ps[0] = state.t, state.q, state.p
    segments = []
    extrap = basis_values(scheme.grid, 1.0 + scheme.grid.nodes)
    guess = None
    for k in range(steps):
        result = advance(scheme, system, state, h, cfg, guess)
        state = result.state
        times[k + 1], qs[k + 1], ps[k + 1] = state.t, state.q, state.p
        residuals[k], iterations[k] = result.residual, result.newton_iterations
        if keep_segments:
            segments.append(result.segment)
        guess = extrap @ result.segment.node_values
    return Trajectory(times, qs, ps, residuals, iterations, segments)
