"""Galerkin variational integrators for Lagrangian and forced Lagrangian systems."""
from .errors import (DegenerateHessian, GalerkinError, InsufficientData, InvalidDegree, IoFailure,
                     NewtonDivergence, OrderMismatch, ShootingDivergence, UnsupportedSize, ZeroError)
from .galerkin import (GalerkinScheme, StepResult, StepState, Trajectory, boundary_momenta,
                       discrete_forces, discrete_lagrangian, forced_step, integrate_trajectory,
                       internal_action, internal_gradient, internal_hessian, is_minimizer, make_scheme,
                       solve_interior, step)
from .mechanics import (LagrangianSystem, NewtonConfig, angular_momentum, check_derivatives,
                        euler_lagrange_rhs, hamiltonian, make_system, momentum, velocity_from_momentum)
from .polynomials import (ControlGrid, CurveSegment, basis_derivatives, basis_values, eval_segment,
                          interpolate_function, make_grid)
from .quadrature import Quadrature, gauss_legendre, gauss_lobatto, integrate, parse_rule, verify_order

__version__ = "0.1.0"
