"""Tau-preconditioned GMRES for unsteady Riesz space-fractional diffusion."""

from .analysis import (
    ConvergenceConstants,
    commutator_bound_check,
    convergence_constants,
    preconditioned_spectrum_check,
    tau_spectrum_check,
    convergence_rate_check,
)
from .coefficients import (
    CoefficientSequence,
    Scheme,
    centered_difference_coeffs,
    cubic_spline_coeffs,
    make_coeffs,
    shifted_grunwald_coeffs,
    validate_properties,
)
from .krylov import KrylovResult, SolverConfig, gmres
from .operator import SfdeOperator, build_operator
from .preconditioners import build_strang_circulant, build_tau
from .problems import example1, example2, relative_error, time_step_solve
from .transforms import GridShape, ToeplitzSymbol

__version__ = "0.1.0"
