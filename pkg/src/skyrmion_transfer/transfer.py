"""Spin-momentum Bell measurement on photon A and Pauli feed-forward on photon B."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import NoiseParams, isotropic_mix, local_imperfection, pauli_channel
from .states import BELL_LABELS, SkyrmionSpec, bell_basis_spin_momentum, chi_state, local_skyrmion
from .tensor import (
    MOMENTUM_A,
    POL_B,
    SPIN_A,
    DensityOperator,
    LinearOperator,
    as_density,
    conjugate,
    embed,
    mix,
    partial_trace,
    tensor_product,
)

DEGENERATE_PROBABILITY = 1e-15

# Product state (spin index, momentum sign) reached by each Bell state under
# the controlled spin flip.
_SEPARABLE_IMAGE = {
    "PhiPlus": (0, +1),
    "PhiMinus": (0, -1),
    "PsiPlus": (1, +1),
    "PsiMinus": (1, -1),
}

_CORRECTION_AXIS = {"PhiPlus": None, "PhiMinus": "z", "PsiPlus": "x", "PsiMinus": "y"}


@dataclass(frozen=True)
class BsmOutcome:
    label: str
    probability: float
    conditional_state: Optional[DensityOperator]

    @property
    def degenerate(self) -> bool:
        return self.conditional_state is None


def disentangling_unitary() -> LinearOperator:
    """Controlled spin flip: identity for k1, sigma_x on spin for k2."""
    k1 = np.diag([1.0, 0.0])
    k2 = np.diag([0.0, 1.0])
    x = np.array([[0, 1], [1, 0]])
    u = np.kron(np.eye(2), k1) + np.kron(x, k2)  # (spin, momentum) order
    return LinearOperator((SPIN_A, MOMENTUM_A), u)


def _bell_projector(label: str) -> LinearOperator:
    beta = bell_basis_spin_momentum()[label].amplitudes
    return LinearOperator((SPIN_A, MOMENTUM_A), np.outer(beta, beta.conj()))


def _separable_projector(label: str) -> LinearOperator:
    spin, sign = _SEPARABLE_IMAGE[label]
    s = np.zeros(2)
    s[spin] = 1.0
    k = np.array([1.0, sign]) / np.sqrt(2)
    v = np.kron(s, k)
    return LinearOperator((SPIN_A, MOMENTUM_A), np.outer(v, v))


def _project(rho: DensityOperator, projector: LinearOperator, label: str) -> BsmOutcome:
    p = embed(projector, rho.factors)
    unnorm = p @ rho.entries @ p
    prob = float(np.trace(unnorm).real)
    if prob < DEGENERATE_PROBABILITY:
        return BsmOutcome(label, max(prob, 0.0), None)
    unnorm = unnorm / prob
    post = DensityOperator(rho.factors, 0.5 * (unnorm + unnorm.conj().T))
    keep = [f for f in rho.factors if f not in (SPIN_A, MOMENTUM_A)]
    return BsmOutcome(label, prob, partial_trace(post, keep))


def bsm_project(state, label: str, via_unitary: bool = False) -> BsmOutcome:
    """Project photon A's spin and momentum onto one Bell state.

    With ``via_unitary`` the measurement is realized as on the chip: the
    controlled spin flip first, then independent spin and momentum readout.
    """
    if label not in BELL_LABELS:
        raise ValueError(f"unknown Bell outcome {label!r}")
    rho = as_density(state)
    if not {SPIN_A, MOMENTUM_A} <= set(rho.factors):
        raise ValueError("state must contain spin_A and momentum_A factors")
    if via_unitary:
        rho = conjugate(disentangling_unitary(), rho)
        return _project(rho, _separable_projector(label), label)
    return _project(rho, _bell_projector(label), label)


def pauli_correction(label: str) -> LinearOperator:
    axis = _CORRECTION_AXIS[label]
    if axis is None:
        return LinearOperator.identity((POL_B,))
    return LinearOperator.pauli(axis, POL_B)


def prepare_input(spec: SkyrmionSpec, noise: NoiseParams = NoiseParams()) -> DensityOperator:
    """Local skyrmion (with imperfection) tensored with the noisy link."""
    rho_l = local_imperfection(local_skyrmion(spec).density(), noise.lambda1)
    rho_chi = isotropic_mix(chi_state().density(), noise.xi0)
    rho_chi = pauli_channel(rho_chi, noise.axis, noise.p)
    return tensor_product(rho_l, rho_chi)


def transfer_pipeline(
    spec: SkyrmionSpec,
    noise: NoiseParams = NoiseParams(),
    correct: bool = True,
    via_unitary: bool = False,
) -> dict[str, BsmOutcome]:
    """All four BSM branches, optionally Pauli-corrected, keyed by label."""
    rho = prepare_input(spec, noise)
    out = {}
    for label in BELL_LABELS:
        outcome = bsm_project(rho, label, via_unitary=via_unitary)
        if correct and not outcome.degenerate:
            corrected = conjugate(pauli_correction(label), outcome.conditional_state)
            outcome = BsmOutcome(label, outcome.probability, corrected)
        out[label] = outcome
    return out


def transferred_state(spec: SkyrmionSpec, noise: NoiseParams = NoiseParams()) -> DensityOperator:
    """Outcome-averaged corrected state of photon A's OAM and photon B's polarization."""
    branches = [b for b in transfer_pipeline(spec, noise).values() if not b.degenerate]
    total = sum(b.probability for b in branches)
    return mix([b.probability / total for b in branches], [b.conditional_state for b in branches])

