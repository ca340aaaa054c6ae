"""Simulation of entanglement-assisted loading and non-local transfer of photonic skyrmion topology."""

from .channels import NoiseParams, isotropic_mix, local_imperfection, pauli_channel, poincare_ellipsoid
from .correlations import concurrence, discord, fidelity_flip, fidelity_from_purity_werner, fidelity_pure, purity
from .states import BELL_LABELS, GratingSpec, SkyrmionSpec, local_skyrmion, nonlocal_target, psi2
from .tensor import MOMENTUM_A, OAM_A, POL_B, SPIN_A, DensityOperator, LinearOperator, StateVector, TensorError
from .texture import StokesField, TransverseGrid, mode_pair, skyrmion_number, skyrmion_number_fd, stokes_nonlocal
from .transfer import bsm_project, transfer_pipeline, transferred_state

__version__ = "0.1.0"
