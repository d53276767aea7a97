"""
Lagrangian systems, the Legendre transform and the Euler-Lagrange vector field.

All system callables take ``q`` and ``v`` with shape ``(..., n)`` and must
broadcast over the leading axes: gradients return ``(..., n)``, Hessian
blocks ``(..., n, n)``. ``hess_qv[..., a, c]`` is d^2 L / dq_a dv_c.
Set ``vectorized=False`` to wrap scalar-only callables in a Python loop.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateHessian, NewtonDivergence

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class NewtonConfig:
    tolerance: float = 1e-12
    max_iter: int = 50
    line_search: bool = True
    certify_minimizer: bool = False
    # extra Newton update once the tolerance is met
    polish: bool = True

    def __post_init__(self):
        if not self.tolerance >= 1e-14:
            raise ValueError("Newton tolerance must be >= 1e-14")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def _looped(fn, out_rank):
    """Wrap a function of single (q, v) points so it accepts stacked inputs."""
    if fn is None:
        return None

    def wrapped(q, v, *args):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        lead = np.broadcast_shapes(q.shape[:-1], v.shape[:-1])
        n = q.shape[-1]
        qf = np.broadcast_to(q, lead + (n,)).reshape(-1, n)
        vf = np.broadcast_to(v, lead + (n,)).reshape(-1, n)
        out = np.array([np.asarray(fn(a, b, *args), dtype=float) for a, b in zip(qf, vf)])
        return out.reshape(lead + (n,) * out_rank)

    return wrapped


@dataclass(frozen=True, eq=False)
class LagrangianSystem:
    dim: int
    lagrangian: Callable
    grad_q: Callable
    grad_v: Callable
    hess_qq: Callable
    hess_qv: Callable
    hess_vv: Callable
    force: Optional[Callable] = None
    force_dq: Optional[Callable] = None
    force_dv: Optional[Callable] = None
    # extension: explicit time-dependent forcing f(t), added to force(q, v)
    drive: Optional[Callable] = None
    exact_flow: Optional[Callable] = None
    label: str = "custom"
    params: dict = field(default_factory=dict)
    q_box: tuple = (-1.0, 1.0)
    vectorized: bool = True

    def __post_init__(self):
        if self.vectorized:
            return
        for name, rank in (("lagrangian", 0), ("grad_q", 1), ("grad_v", 1), ("hess_qq", 2),
                           ("hess_qv", 2), ("hess_vv", 2), ("force", 1), ("force_dq", 2),
                           ("force_dv", 2)):
            object.__setattr__(self, name, _looped(getattr(self, name), rank))
        object.__setattr__(self, "vectorized", True)

    @property
    def is_forced(self):
        return self.force is not None or self.drive is not None

    def total_force(self, q, v, t=0.0):
        """Force covector at (q, v, t); zeros for a conservative system."""
        q = np.asarray(q, dtype=float)
        out = np.zeros(np.broadcast_shapes(q.shape, np.shape(v)))
        if self.force is not None:
            out = out + self.force(q, v)
        if self.drive is not None:
            t = np.asarray(t, dtype=float)
            out = out + np.asarray(self.drive(t), dtype=float).reshape(t.shape + (1,) * (out.ndim - t.ndim))
        return out

    def force_jacobians(self, q, v, eps=1e-7):
        """(df/dq, df/dv) with shape (..., n, n); finite differences when not supplied."""
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast_shapes(q.shape, v.shape)
        if self.force is None:
            z = np.zeros(shape + (self.dim,))
            return z, z
        if self.force_dq is not None and self.force_dv is not None:
            return self.force_dq(q, v), self.force_dv(q, v)
        q = np.broadcast_to(q, shape)
        v = np.broadcast_to(v, shape)
        jq = np.empty(shape + (self.dim,))
        jv = np.empty(shape + (self.dim,))
        for c in range(self.dim):
            e = np.zeros(self.dim)
            e[c] = eps
            jq[..., :, c] = (self.force(q + e, v) - self.force(q - e, v)) / (2 * eps)
            jv[..., :, c] = (self.force(q, v + e) - self.force(q, v - e)) / (2 * eps)
        return jq, jv


def _rcond(m):
    return 1.0 / np.linalg.cond(m)


def _check_hess_vv(system, q, v):
    m = np.asarray(system.hess_vv(q, v), dtype=float)
    if not np.all(np.isfinite(m)) or _rcond(m) < RCOND_MIN:
        raise DegenerateHessian(f"{system.label}: d^2L/dv^2 is singular at q={q}, v={v}")
    return m


def momentum(system, q, v):
    """Legendre transform p = dL/dv."""
    return np.asarray(system.grad_v(np.asarray(q, float), np.asarray(v, float)), dtype=float)


def velocity_from_momentum(system, q, p, cfg=NewtonConfig()):
    """Invert the Legendre transform at fixed q by Newton iteration."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    v = np.linalg.solve(_check_hess_vv(system, q, np.zeros_like(q)), p)
    for _ in range(cfg.max_iter + 1):
        r = momentum(system, q, v) - p
        if np.max(np.abs(r)) <= cfg.tolerance * max(1.0, np.max(np.abs(p))):
            return v
        v = v - np.linalg.solve(_check_hess_vv(system, q, v), r)
    raise NewtonDivergence(f"{system.label}: Legendre inversion did not converge")


def hamiltonian(system, q, p, cfg=NewtonConfig()):
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    v = velocity_from_momentum(system, q, p, cfg)
    return float(p @ v - system.lagrangian(q, v))


def euler_lagrange_rhs(system, q, v, t=0.0):
    """Acceleration solving the (forced) Euler-Lagrange equation."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    m = _check_hess_vv(system, q, v)
    rhs = system.grad_q(q, v) - system.hess_qv(q, v).T @ v
    if system.is_forced:
        rhs = rhs + system.total_force(q, v, t)
    return np.linalg.solve(m, rhs)


def check_derivatives(system, n_points=100, step=1e-5, rtol=1e-6, seed=0):
    """Compare analytic derivatives with central differences of L.

    Returns the worst relative error seen; raises AssertionError above ``rtol``.
    """
    rng = np.random.default_rng(seed)
    n = system.dim
    lo, hi = system.q_box
    worst = 0.0
    eye = np.eye(n) * step

    def rel(a, b):
        return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a)))

    for _ in range(n_points):
        q = rng.uniform(lo, hi, n)
        v = rng.uniform(-1.0, 1.0, n)
        L = system.lagrangian
        fd_q = np.array([(L(q + e, v) - L(q - e, v)) / (2 * step) for e in eye])
        fd_v = np.array([(L(q, v + e) - L(q, v - e)) / (2 * step) for e in eye])
        fd_qq = np.array([(system.grad_q(q + e, v) - system.grad_q(q - e, v)) / (2 * step) for e in eye])
        fd_qv = np.array([(system.grad_q(q, v + e) - system.grad_q(q, v - e)) / (2 * step) for e in eye]).T
        fd_vv = np.array([(system.grad_v(q, v + e) - system.grad_v(q, v - e)) / (2 * step) for e in eye])
        worst = max(worst,
                    rel(system.grad_q(q, v), fd_q), rel(system.grad_v(q, v), fd_v),
                    rel(system.hess_qq(q, v), fd_qq), rel(system.hess_qv(q, v), fd_qv),
                    rel(system.hess_vv(q, v), fd_vv))
    if worst > rtol:
        raise AssertionError(f"{system.label}: derivative mismatch {worst:.3e} > {rtol:.1e}")
    return worst


# ---------------------------------------------------------------------------
# built-in systems


def _eye_like(x, n, scale=1.0):
    return np.broadcast_to(scale * np.eye(n), np.shape(x)[:-1] + (n, n)).copy()


def _zeros_nn(x, n):
    return np.zeros(np.shape(x)[:-1] + (n, n))


def _quadratic_kinetic(m, n, potential, dpot, d2pot, **kw):
    """L = m |v|^2 / 2 - V(q)."""
    return LagrangianSystem(
        dim=n,
        lagrangian=lambda q, v: 0.5 * m * np.sum(v * v, axis=-1) - potential(q),
        grad_q=lambda q, v: -dpot(q) + 0.0 * v,
        grad_v=lambda q, v: m * v + 0.0 * q,
        hess_qq=lambda q, v: -d2pot(q),
        hess_qv=lambda q, v: _zeros_nn(q + v, n),
        hess_vv=lambda q, v: _eye_like(q + v, n, m),
        **kw,
    )


def free_particle(m=1.0, dim=1):
    dim = int(dim)

    def flow(q, p, t):
        return q + t * p / m, np.array(p, dtype=float)

    return _quadratic_kinetic(
        m, dim,
        potential=lambda q: np.zeros(np.shape(q)[:-1]),
        dpot=lambda q: np.zeros_like(q),
        d2pot=lambda q: _zeros_nn(q, dim),
        exact_flow=flow, label="free_particle", params={"m": m, "dim": dim},
    )


def _oscillator_flow(m, k):
    omega = np.sqrt(k / m)

    def flow(q, p, t):
        c, s = np.cos(omega * t), np.sin(omega * t)
        return q * c + p / (m * omega) * s, -m * omega * q * s + p * c

    return flow


def harmonic_oscillator(m=1.0, k=1.0):
    return _quadratic_kinetic(
        m, 1,
        potential=lambda q: 0.5 * k * np.sum(q * q, axis=-1),
        dpot=lambda q: k * q,
        d2pot=lambda q: _eye_like(q, 1, k),
        exact_flow=_oscillator_flow(m, k), label="harmonic_oscillator", params={"m": m, "k": k},
    )


def quartic_oscillator(m=1.0, lam=1.0):
    return _quadratic_kinetic(
        m, 1,
        potential=lambda q: 0.25 * lam * np.sum(q ** 4, axis=-1),
        dpot=lambda q: lam * q ** 3,
        d2pot=lambda q: (3.0 * lam * q ** 2)[..., None],
        label="quartic_oscillator", params={"m": m, "lam": lam},
    )


def pendulum(m=1.0, length=1.0, g=1.0):
    """L = m l^2 v^2 / 2 + m g l cos q."""
    inertia = m * length ** 2
    mgl = m * g * length
    return _quadratic_kinetic(
        inertia, 1,
        potential=lambda q: -mgl * np.cos(q[..., 0]),
        dpot=lambda q: mgl * np.sin(q),
        d2pot=lambda q: (mgl * np.cos(q))[..., None],
        label="pendulum", params={"m": m, "length": length, "g": g},
    )


def kepler(mu=1.0, m=1.0):
    """Planar two-body problem in relative coordinates, V = -mu m / |q|."""

    def potential(q):
        return -mu * m / np.linalg.norm(q, axis=-1)

    def dpot(q):
        r = np.linalg.norm(q, axis=-1, keepdims=True)
        return mu * m * q / r ** 3

    def d2pot(q):
        r = np.linalg.norm(q, axis=-1)[..., None, None]
        outer = q[..., :, None] * q[..., None, :]
        return mu * m * (np.eye(2) / r ** 3 - 3.0 * outer / r ** 5)

    return _quadratic_kinetic(
        m, 2, potential, dpot, d2pot,
        label="kepler", params={"mu": mu, "m": m}, q_box=(0.5, 1.5),
    )


def angular_momentum(q, p):
    q = np.asarray(q)
    p = np.asarray(p)
    return q[..., 0] * p[..., 1] - q[..., 1] * p[..., 0]


def damped_oscillator(m=1.0, k=1.0, gamma=0.1):
    """Harmonic oscillator with linear friction f = -gamma v."""
    generator = np.array([[0.0, 1.0 / m], [-k, -gamma / m]])

    def flow(q, p, t):
        z = expm(generator * t) @ np.array([np.ravel(q)[0], np.ravel(p)[0]])
        return z[:1], z[1:]

    base = harmonic_oscillator(m, k)
    return LagrangianSystem(
        dim=1,
        lagrangian=base.lagrangian, grad_q=base.grad_q, grad_v=base.grad_v,
        hess_qq=base.hess_qq, hess_qv=base.hess_qv, hess_vv=base.hess_vv,
        force=lambda q, v: -gamma * v + 0.0 * q,
        force_dq=lambda q, v: _zeros_nn(q + v, 1),
        force_dv=lambda q, v: _eye_like(q + v, 1, -gamma),
        exact_flow=flow, label="damped_oscillator", params={"m": m, "k": k, "gamma": gamma},
    )


def driven_oscillator(m=1.0, k=1.0, amplitude=1.0, omega=0.5):
    """Oscillator with explicit driving A sin(omega t); an extension flagged in params."""
    base = harmonic_oscillator(m, k)
    return LagrangianSystem(
        dim=1,
        lagrangian=base.lagrangian, grad_q=base.grad_q, grad_v=base.grad_v,
        hess_qq=base.hess_qq, hess_qv=base.hess_qv, hess_vv=base.hess_vv,
        drive=lambda t: amplitude * np.sin(omega * t),
        label="driven_oscillator",
        params={"m": m, "k": k, "amplitude": amplitude, "omega": omega, "beyond_paper": True},
    )


SYSTEMS = {
    "free_particle": free_particle,
    "harmonic_oscillator": harmonic_oscillator,
    "quartic_oscillator": quartic_oscillator,
    "pendulum": pendulum,
    "kepler": kepler,
    "damped_oscillator": damped_oscillator,
    "driven_oscillator": driven_oscillator,
}

_ALIASES = {"free": "free_particle", "harmonic": "harmonic_oscillator", "ho": "harmonic_oscillator",
            "quartic": "quartic_oscillator", "damped": "damped_oscillator", "driven": "driven_oscillator"}


def register(label, factory, check=False):
    """Add a system factory to the registry, optionally running the derivative self-test."""
    if check:
        check_derivatives(factory())
    SYSTEMS[label] = factory


def make_system(label, **params):
    key = _ALIASES.get(label, label).replace("-", "_")
    if key not in SYSTEMS:
        raise ValueError(f"unknown system {label!r}; available: {sorted(SYSTEMS)}")
    return SYSTEMS[key](**params)
