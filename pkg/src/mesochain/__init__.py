"""Mesoscale averaging, deconvolution closures, and closed continuum models
for 1D particle chains."""

from .potentials import PowerLawPotential, force_magnitude, potential_energy_scalar
from .chain import (
    ChainConfig,
    ChainState,
    advance,
    advance_to,
    init_oscillatory,
    init_ramp,
    net_forces,
    potential_energy,
    step_verlet,
    total_energy,
)
from .windows import BOX, GAUSSIAN, MesoMesh, WindowFunction, mesh_for_window
from .fields import FineField, MesoField, fine_default_size, meso_to_fine
from .averaging import (
    average_density,
    average_momentum,
    average_velocity,
    convective_stress_exact,
    interaction_stress_exact,
    jacobian_at_mesh,
)
from .deconvolution import (
    ConvOperator,
    apply_R,
    discrepancy_stop,
    landweber_reconstruct,
    reconstruct_J,
    reconstruct_v,
)
from .closure import (
    PrescribedState,
    local_eos,
    prescribe_positions,
    prescribe_velocities,
    stress_conv_zero,
    stress_int_zero,
    stress_order_n,
)
from .mesosolver import MesoState, run_closed, step_meso

__version__ = "0.1.0"

__all__ = [
    "PowerLawPotential", "force_magnitude", "potential_energy_scalar",
    "ChainConfig", "ChainState", "advance", "advance_to", "init_oscillatory",
    "init_ramp", "net_forces", "potential_energy", "step_verlet", "total_energy",
    "BOX", "GAUSSIAN", "MesoMesh", "WindowFunction", "mesh_for_window",
    "FineField", "MesoField", "fine_default_size", "meso_to_fine",
    "average_density", "average_momentum", "average_velocity",
    "convective_stress_exact", "interaction_stress_exact", "jacobian_at_mesh",
    "ConvOperator", "apply_R", "discrepancy_stop", "landweber_reconstruct",
    "reconstruct_J", "reconstruct_v",
    "PrescribedState", "local_eos", "prescribe_positions", "prescribe_velocities",
    "stress_conv_zero", "stress_int_zero", "stress_order_n",
    "MesoState", "run_closed", "step_meso",
]
