"""Monotone finite-difference solvers for fractional fully nonlinear parabolic equations.

The space discretisation replaces (-Delta)^(sigma/2) by the same power of the
discrete Laplacian, which is a lattice quadrature with explicit nonnegative
weights.  Explicit, theta, Lax-Friedrichs convection and Isaacs (inf-sup)
time steppers are built on top, together with the problem library and the
convergence-study harness.
"""

from .cfl import CflInputs, cfl_convection, cfl_explicit, cfl_isaacs, cfl_multidiffusion, cfl_theta
from .config import ConfigError, RunDescription, format_config, parse_config, parse_config_text
from .grid import AxisMask, GridFunction, grid_points
from .harness import (
    ErrorReport,
    emit_csv,
    observed_orders,
    relative_linf_error,
    run_experiment,
    write_solution_csv,
)
from .operators import (
    FractionalLaplacian,
    apply_directional,
    apply_fractional,
    apply_fractional_field,
    central_gradient,
    lf_viscosity,
    upwind_diff_minus,
    upwind_diff_plus,
)
from .problems import (
    ControlledCoefficients,
    ExactSolution,
    Hamiltonian,
    Nonlinearity,
    builtin_initial,
    builtin_nonlinearity,
    exact_linear_sigma1,
    load_coefficients_csv,
    transport_hamiltonian,
)
from .stepping import (
    CflViolation,
    DiffusionTerm,
    FixedPointError,
    NumericalError,
    Problem,
    SchemeConfig,
    Trajectory,
    max_time_step,
    solve,
    step_convection,
    step_explicit,
    step_isaacs,
    step_linear,
    step_theta,
)
from .weights import QuadratureError, WeightTable, limit_table, mass_constant, weights_1d, weights_nd

__version__ = "0.1.0"

import types as _types

__all__ = sorted(
    name for name, obj in globals().items()
    if not name.startswith("_") and not isinstance(obj, _types.ModuleType)
)
