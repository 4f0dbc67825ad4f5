"""Non-degenerate nonlinear diffusion: solvers, random walks and long-time diagnostics."""

__version__ = "0.1.0"

from .diffusivity import (
    PolynomialDiffusivity,
    D_of_v,
    eval_P,
    linear_F,
    psi,
    psi_inverse,
)
from .profiles import (
    AlgebraicDecay,
    Box,
    Field1D,
    Gaussian,
    Grid,
    exact_heat_box,
    gaussian_fundamental,
    mass,
    sample_positions,
)
from .pde import Form, SolverConfig, SolverState, advance, geometric_times, run
from .diagnostics import (
    BarrierParams,
    barrier_residual,
    build_report,
    fit_decay_slope,
    l2_error_vs_gaussian,
    mapping_consistency,
    rescale_self_similar,
    sandwich_envelope,
)
from .walk import ParticleEnsemble, TwoPoint, Uniform, density_estimate, evolve

__all__ = [
    "PolynomialDiffusivity",
    "advance",
    "AlgebraicDecay",
    "barrier_residual",
    "BarrierParams",
    "Box",
    "build_report",
    "D_of_v",
    "density_estimate",
    "eval_P",
    "evolve",
    "exact_heat_box",
    "Field1D",
    "fit_decay_slope",
    "Form",
    "Gaussian",
    "gaussian_fundamental",
    "geometric_times",
    "Grid",
    "l2_error_vs_gaussian",
    "linear_F",
    "mapping_consistency",
    "mass",
    "ParticleEnsemble",
    "psi",
    "psi_inverse",
    "rescale_self_similar",
    "run",
    "sample_positions",
    "sandwich_envelope",
    "SolverConfig",
    "SolverState",
    "TwoPoint",
    "Uniform",
]
