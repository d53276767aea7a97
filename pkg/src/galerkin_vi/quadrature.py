"""
Quadrature rules on the unit interval.

Nodes are found by Newton iteration on the three-term Legendre recurrence
and mapped from [-1, 1] to [0, 1]; the exactness check in `verify_order`
guards against a bad root.
"""
from dataclasses import dataclass

import numpy as np

from .errors import OrderMismatch, UnsupportedSize

MAX_POINTS = 16
_NEWTON_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Rule ``h * sum(b_i f(a + h c_i))`` with points ``c_i`` in [0, 1].

    ``order`` is u: polynomials of degree <= u - 1 are integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    order: int
    label: str

    @property
    def size(self):
        return len(self.points)

    def __repr__(self):
        return f"Quadrature({self.label}, u={self.order})"


def _legendre(n, x):
    """Return P_n(x) and P_n'(x) via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    # derivative from (1 - x^2) P_n' = n (P_{n-1} - x P_n); nodes are interior
    dp = n * (p_prev - x * p) / (1.0 - x * x)
    return p, dp


def _newton_roots(fn, x0, max_iter=100):
    x = np.array(x0, dtype=float)
    if x.size == 0:
        return x
    for _ in range(max_iter):
        f, df = fn(x)
        dx = f / df
        x -= dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    return x


def gauss_legendre(r):
    """r-point Gauss-Legendre rule on [0, 1], order 2r."""
    if not 1 <= r <= MAX_POINTS:
        raise UnsupportedSize(f"Gauss-Legendre needs 1 <= r <= {MAX_POINTS}, got {r}")
    k = np.arange(1, r + 1)
    guess = -np.cos(np.pi * (k - 0.25) / (r + 0.5))
    x = _newton_roots(lambda y: _legendre(r, y), guess)
    _, dp = _legendre(r, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry
    w = 0.5 * (w + w[::-1])
    return Quadrature((x + 1.0) / 2.0, w / 2.0, 2 * r, f"gauss:{r}")


def _lobatto_interior(n, x):
    # roots of P_n'; second derivative from the Legendre ODE
    p, dp = _legendre(n, x)
    d2p = (2.0 * x * dp - n * (n + 1) * p) / (1.0 - x * x)
    return dp, d2p


def gauss_lobatto(r):
    """r-point Gauss-Lobatto rule on [0, 1] including both endpoints, order 2r - 2."""
    if not 2 <= r <= MAX_POINTS:
        raise UnsupportedSize(f"Gauss-Lobatto needs 2 <= r <= {MAX_POINTS}, got {r}")
    n = r - 1
    guess = -np.cos(np.pi * np.arange(1, n) / n)
    interior = _newton_roots(lambda y: _lobatto_interior(n, y), guess)
    x = np.concatenate(([-1.0], interior, [1.0]))
    x = 0.5 * (x - x[::-1])
    p = np.ones_like(x)
    p[1:-1], _ = _legendre(n, x[1:-1])
    p[0], p[-1] = (-1.0) ** n, 1.0
    w = 2.0 / (n * (n + 1) * p * p)
    w = 0.5 * (w + w[::-1])
    return Quadrature((x + 1.0) / 2.0, w / 2.0, 2 * r - 2, f"lobatto:{r}")


def parse_rule(spec):
    """Build a rule from ``gauss:<r>`` or ``lobatto:<r>``."""
    family, _, size = spec.partition(":")
    try:
        r = int(size)
    except ValueError:
        raise ValueError(f"bad quadrature spec {spec!r}; expected gauss:<r> or lobatto:<r>") from None
    family = family.strip().lower()
    if family in ("gauss", "gauss-legendre", "legendre"):
        return gauss_legendre(r)
    if family in ("lobatto", "gauss-lobatto"):
        return gauss_lobatto(r)
    raise ValueError(f"unknown quadrature family {family!r}")


def integrate(rule, fn, a, h):
    """Approximate the integral of ``fn`` over [a, a + h]."""
    values = np.array([fn(a + h * c) for c in rule.points], dtype=float)
    return h * np.tensordot(rule.weights, values, axes=(0, 0))


def _shifted_legendre(k, t):
    with np.errstate(divide="ignore", invalid="ignore"):
        return _legendre(k, 2.0 * np.asarray(t, dtype=float) - 1.0)[0]


def empirical_order(rule, tol=1e-10, max_degree=None):
    """Largest k + 1 such that every polynomial of degree <= k is integrated exactly.

    Exactness is probed on shifted Legendre polynomials, whose integral over
    [0, 1] is 0 for k >= 1 and whose sup norm is 1. Plain monomials are a
    poor probe here: for r >= 10 the Gauss error on t^(2r) is below 1e-10
    relative, so the order would be over-reported.
    """
    if max_degree is None:
        max_degree = 2 * rule.size + 2
    for k in range(max_degree + 1):
        exact = 1.0 if k == 0 else 0.0
        approx = float(rule.weights @ _shifted_legendre(k, rule.points))
        if abs(approx - exact) > tol:
            return k
    return max_degree + 1


def verify_order(rule, tol=1e-10):
    """Return the empirical order of ``rule``; raise if it differs from the declared one."""
    u = empirical_order(rule, tol)
    if u != rule.order:
        raise OrderMismatch(f"{rule.label}: declared order {rule.order}, measured {u}")
    return u
