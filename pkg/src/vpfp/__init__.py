"""Fourier-Hermite solver for a scaled kinetic Fokker-Planck system with
self-consistent electrostatics, its drift-diffusion limit, and the sweep
harness that measures the convergence between the two."""

from .spectral import (
    ConfigurationError,
    SpatialGrid,
    HermiteBasis,
    SpectralField,
    forward_transform,
    inverse_transform,
    spatial_derivative,
    hermite_shift_apply,
    quadrature_oracle_moment,
)
from .operators import (
    DistributionField,
    MacroFields,
    apply_L,
    moments,
    project_macro,
    project_micro,
    gamma_moment,
    solve_poisson,
    vpfp_rhs,
    coercivity_gap,
)
from .solver import SolverConfig, KineticState, Trajectory, make_initial_data, step, run
from .ddp import DdpState, ddp_step, ddp_run
from .diagnostics import (
    EnergyReport,
    sobolev_norm,
    nu_norm,
    energy_functionals,
    legacy_functionals,
    moment_residuals,
    limit_error,
)
from .harness import SweepConfig, SweepResult, run_sweep, estimate_rates

__version__ = "0.1.0"
