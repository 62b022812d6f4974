"""Kinetic-fluid laboratory for slab-symmetric BGK/Boltzmann dynamics near a
viscous contact wave, with operator certification and Knudsen-number sweeps."""

__version__ = "0.1.0"

from .velocity_space import (
    R_GAS,
    TOL_QUAD,
    DistributionField,
    FluidMoments,
    SpatialGrid,
    VelocityGrid,
    build_velocity_grid,
    maxwellian,
    moments,
    primitive_from_conserved,
)
from .micromacro import (
    MacroBasis,
    MicroMacroSplit,
    build_basis,
    project,
    weighted_inner,
    weighted_l2_error,
)
from .collision import (
    CollisionModel,
    CertificationReport,
    LinearizedOperator,
    bgk_collision,
    build_linearized,
    certify_operator_properties,
    collision_frequency,
    hard_sphere_Q,
    solve_LM_inverse,
    transport_coefficients,
)
from .contact_wave import (
    ContactWaveField,
    RiemannContact,
    SelfSimilarProfile,
    build_wave,
    euler_riemann_contact,
    lagrangian_to_eulerian,
    solve_selfsimilar,
    wave_residuals,
)
from .fluid_solver import FluidField, ns_run, ns_step, stable_dt
from .kinetic_solver import KineticConfig, init_from_wave, kinetic_run, kinetic_step
from .diagnostics import (
    ConvergenceReport,
    EnergyReport,
    antiderivatives,
    build_energy_report,
    convergence_sweep,
    energy_E6,
    growth_check,
    micro_decomposition_G,
    pointwise_error_profile,
    scaled_perturbation,
    sup_error_away,
)
