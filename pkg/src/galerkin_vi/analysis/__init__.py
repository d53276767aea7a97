"""Reference solutions, order fitting, convergence studies and reporting."""
from .orders import ConvergenceReport, MetricResult, fit_order, select_rows
from .reference import (ReferenceTrajectory, exact_discrete_lagrangian_oracle, harmonic_action,
                        reference_solution, shoot_momentum)
from .studies import (EnergyReport, StudyConfig, curve_error_study, energy_drift_study,
                      forced_order_study, lagrangian_error_study, mesh_error_study)
