from hho.local_operators import (
    UPWIND_VARIANTS,
    LocalContext,
    LocalOperatorSet,
    OperatorOptions,
    build_all_local_operators,
    build_local_operators,
    convection_matrices,
    diffusive_stabilization_matrix,
    local_convection_matrix,
    local_diffusion_matrix,
    local_mass_matrix,
    make_cell_basis,
    potential_reconstruction_matrix,
)
from hho.velocity import DEFAULT_VELOCITY_BUMP, VelocityField, constant_velocity, zero_velocity

__all__ = [
    "UPWIND_VARIANTS",
    "LocalContext",
    "LocalOperatorSet",
    "OperatorOptions",
    "build_all_local_operators",
    "build_local_operators",
    "convection_matrices",
    "diffusive_stabilization_matrix",
    "local_convection_matrix",
    "local_diffusion_matrix",
    "local_mass_matrix",
    "make_cell_basis",
    "potential_reconstruction_matrix",
    "DEFAULT_VELOCITY_BUMP",
    "VelocityField",
    "constant_velocity",
    "zero_velocity",
]
