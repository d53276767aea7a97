"""
Control grids on [0, 1], Lagrange cardinal bases and per-step curve segments.

Cardinal polynomials are evaluated in barycentric form. Derivatives go
through the nodal differentiation matrix, which is exact because each
derivative is a polynomial of lower degree.
"""
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidDegree
from .quadrature import gauss_legendre, gauss_lobatto

MAX_DEGREE = 12
GRID_KINDS = ("lobatto", "chebyshev_lobatto", "equispaced")


class ExtrapolationWarning(UserWarning):
    """A segment was evaluated outside its own time interval."""


@dataclass(frozen=True, eq=False)
class ControlGrid:
    """Control points ``0 = d_0 < d_1 < ... < d_s = 1``."""

    nodes: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidDegree("a control grid needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("control grid must start at 0 and end at 1")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("control grid must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def s(self):
        return self.nodes.size - 1

    @cached_property
    def bary_weights(self):
        d = self.nodes
        diff = d[:, None] - d[None, :]
        np.fill_diagonal(diff, 1.0)
        w = 1.0 / np.prod(diff, axis=1)
        return w / np.max(np.abs(w))

    @cached_property
    def diff_matrix(self):
        """D[k, j] = l_j'(d_k)."""
        d, w = self.nodes, self.bary_weights
        diff = d[:, None] - d[None, :]
        np.fill_diagonal(diff, 1.0)
        D = (w[None, :] / w[:, None]) / diff
        np.fill_diagonal(D, 0.0)
        np.fill_diagonal(D, -D.sum(axis=1))
        return D

    def __repr__(self):
        return f"ControlGrid(s={self.s}, kind={self.kind})"


def make_grid(s, kind="lobatto"):
    if s < 1 or s > MAX_DEGREE:
        raise InvalidDegree(f"degree must satisfy 1 <= s <= {MAX_DEGREE}, got {s}")
    kind = kind.replace("-", "_")
    if kind == "lobatto":
        nodes = gauss_lobatto(s + 1).points.copy()
    elif kind == "chebyshev_lobatto":
        nodes = 0.5 * (1.0 - np.cos(np.pi * np.arange(s + 1) / s))
    elif kind == "equispaced":
        nodes = np.arange(s + 1) / s
    else:
        raise ValueError(f"unknown grid kind {kind!r}; choose from {GRID_KINDS}")
    nodes[0], nodes[-1] = 0.0, 1.0
    return ControlGrid(nodes, kind)


def basis_values(grid, tau):
    """Cardinal polynomials l_j(tau); output shape ``tau.shape + (s + 1,)``."""
    tau = np.asarray(tau, dtype=float)
    t = tau.reshape(-1)
    d, w = grid.nodes, grid.bary_weights
    diff = t[:, None] - d[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = w / diff
        out = terms / terms.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    out[hit] = exact[hit].astype(float)
    return out.reshape(tau.shape + (d.size,))


def basis_derivatives(grid, tau):
    """d l_j / d tau evaluated at ``tau``."""
    return basis_values(grid, tau) @ grid.diff_matrix


@dataclass(frozen=True, eq=False)
class CurveSegment:
    """Polynomial ``q(t_start + h tau) = sum_j q_j l_j(tau)`` over one step."""

    grid: ControlGrid
    node_values: np.ndarray
    h: float
    t_start: float = 0.0

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.node_values, dtype=float))
        if values.shape[0] != self.grid.s + 1:
            values = values.T
        object.__setattr__(self, "node_values", values)

    @property
    def t_end(self):
        return self.t_start + self.h

    def __call__(self, t):
        return eval_segment(self, t)


def eval_segment(segment, t):
    """Return ``(q, qdot)`` at time(s) ``t``; arrays gain a trailing dimension n."""
    t = np.asarray(t, dtype=float)
    tau = (t - segment.t_start) / segment.h
    if np.any(tau < -1e-12) or np.any(tau > 1.0 + 1e-12):
        warnings.warn("evaluating a curve segment outside its step", ExtrapolationWarning, stacklevel=2)
    ell = basis_values(segment.grid, tau)
    q = ell @ segment.node_values
    qdot = (ell @ segment.grid.diff_matrix) @ segment.node_values / segment.h
    return q, qdot


def interpolate_function(grid, fn, t_start, h):
    """Segment whose node values sample ``fn`` at ``t_start + h d_j``."""
    if h <= 0:
        raise ValueError("step size must be positive")
    values = [np.atleast_1d(np.asarray(fn(t_start + h * d), dtype=float)) for d in grid.nodes]
    return CurveSegment(grid, np.array(values), h, t_start)


_NORM_RULE = gauss_legendre(5)


def curve_norm(fn, a, h, p, pieces=64):
    """L^p norm of ``fn`` on [a, a + h] for p in {1, 2, inf}.

    Uses composite 5-point Gauss on ``pieces`` subintervals; the sup norm
    is taken over those nodes plus the subinterval endpoints.
    """
    edges = a + h * np.arange(pieces + 1) / pieces
    width = h / pieces
    pts = (edges[:-1, None] + width * _NORM_RULE.points[None, :]).ravel()
    vals = np.array([np.linalg.norm(np.atleast_1d(fn(t))) for t in pts]).reshape(pieces, -1)
    if p == np.inf or p == "inf":
        ends = np.array([np.linalg.norm(np.atleast_1d(fn(t))) for t in edges])
        return float(max(vals.max(), ends.max()))
    if p == 1:
        return float(width * np.sum(vals @ _NORM_RULE.weights))
    if p == 2:
        return float(np.sqrt(width * np.sum((vals ** 2) @ _NORM_RULE.weights)))
    raise ValueError(f"unsupported norm {p!r}")
