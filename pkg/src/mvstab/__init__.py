"""Spectral Galerkin toolkit for Riccati feedback stabilization of
mean-field Fokker-Planck dynamics on the circle."""

__version__ = "0.1.0"

from .kernels import backend_name
from .models import ModelParams, ModelSpec, bessel_i, free_energy, make_model, weighted_norm
from .operators import (HautusReport, LinearizedSystem, SpectrumReport,
                        assemble, default_shapes, hautus_check,
                        schrodinger_check, solve_shape_from_eigenfunction,
                        spectral_gap_sweep, spectrum)
from .riccati import FeedbackLaw, apply_feedback, lyapunov_solve, solve_are
from .simulate import (SimulationSetup, TrajectoryRecord, decay_rate,
                       nonlinear_term, simulate)
from .spectral import GridFunction, SpectralField, convolve, differentiate, \
    inner_product, pointwise_product, project_zero_mean, to_coeffs, to_grid
from .stationary import (StationaryState, kuramoto_order_parameter,
                         solve_self_consistent, stationarity_residual)

__all__ = [
    "ModelParams", "ModelSpec", "bessel_i", "free_energy", "make_model",
    "weighted_norm", "HautusReport", "LinearizedSystem", "SpectrumReport",
    "assemble", "default_shapes", "hautus_check", "schrodinger_check",
    "solve_shape_from_eigenfunction", "spectral_gap_sweep", "spectrum",
    "FeedbackLaw", "apply_feedback", "lyapunov_solve", "solve_are",
    "SimulationSetup", "TrajectoryRecord", "decay_rate", "nonlinear_term",
    "simulate", "GridFunction", "SpectralField", "convolve", "differentiate",
    "inner_product", "pointwise_product", "project_zero_mean", "to_coeffs",
    "to_grid", "StationaryState", "kuramoto_order_parameter",
    "solve_self_consistent", "stationarity_residual", "backend_name",
]
