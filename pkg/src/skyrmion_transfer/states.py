"""Constructors for every state in the loading/transfer protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import (
    MOMENTUM_A,
    OAM_A,
    POL_B,
    SPIN_A,
    LinearOperator,
    StateVector,
    apply,
    tensor_product,
)

SQRT_HALF = 1.0 / np.sqrt(2.0)

BELL_LABELS = ("PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus")


@dataclass(frozen=True)
class GratingSpec:
    """Angular-grating microring: WGM order ``M`` and scatterer counts."""

    M: int
    N_in: int
    N_out: int

    def __post_init__(self):
        if self.N_in < 1 or self.N_out < 1:
            raise ValueError("scatterer counts must be >= 1")

    @classmethod
    def coupled(cls, N_in: int, N_out: int) -> "GratingSpec":
        """Grating pumped at the coupling condition M = N_in + 1."""
        return cls(N_in + 1, N_in, N_out)


@dataclass(frozen=True)
class SkyrmionSpec:
    l: int = 2

    def __post_init__(self):
        if int(self.l) != self.l or self.l == 0:
            raise ValueError(f"OAM charge l must be a nonzero integer, got {self.l!r}")


def grating_oam(spec: GratingSpec, side: str) -> int:
    """OAM charge emitted by the inner (spin-up) or outer (spin-down) grating."""
    if side == "inner":
        return spec.M - spec.N_in - 1
    if side == "outer":
        return spec.M - spec.N_out + 1
    raise ValueError(f"side must be 'inner' or 'outer', got {side!r}")


def local_skyrmion(spec: SkyrmionSpec) -> StateVector:
    """(|0, L> + |l, R>)/sqrt(2) on photon A's OAM and spin."""
    amps = np.zeros(4, dtype=complex)
    amps[0b00] = SQRT_HALF  # |0, L>
    amps[0b11] = SQRT_HALF  # |l, R>
    return StateVector((OAM_A, SPIN_A), amps)


def chi_state() -> StateVector:
    """(|k1>_A |H>_B + |k2>_A |V>_B)/sqrt(2)."""
    amps = np.array([SQRT_HALF, 0, 0, SQRT_HALF], dtype=complex)
    return StateVector((MOMENTUM_A, POL_B), amps)


def path_entangled() -> StateVector:
    """(|P1>|P1> + |P2>|P2>)/sqrt(2).

    The path qubits are stored on the factors they are routed into (photon A's
    momentum, photon B's polarization through the 2D grating coupler), so the
    result coincides with :func:`chi_state`.
    """
    amps = np.zeros(4, dtype=complex)
    amps[[0, 3]] = SQRT_HALF
    return StateVector((MOMENTUM_A, POL_B), amps)


def psi2(spec: SkyrmionSpec) -> StateVector:
    return tensor_product(local_skyrmion(spec), chi_state())


def bell_basis_spin_momentum() -> dict[str, StateVector]:
    """Spin-momentum Bell states of photon A, keyed by outcome label."""
    def ket(a_l_k1, a_r_k2, a_l_k2, a_r_k1):
        amps = np.zeros(4, dtype=complex)  # index = 2*spin + momentum
        amps[0b00], amps[0b11], amps[0b01], amps[0b10] = a_l_k1, a_r_k2, a_l_k2, a_r_k1
        return StateVector((SPIN_A, MOMENTUM_A), amps)

    h = SQRT_HALF
    return {
        "PhiPlus": ket(h, h, 0, 0),
        "PhiMinus": ket(h, -h, 0, 0),
        "PsiPlus": ket(0, 0, h, h),
        "PsiMinus": ket(0, 0, h, -h),
    }


def nonlocal_target(spec: SkyrmionSpec) -> StateVector:
    """(|0>_A |H>_B + |l>_A |V>_B)/sqrt(2)."""
    amps = np.array([SQRT_HALF, 0, 0, SQRT_HALF], dtype=complex)
    return StateVector((OAM_A, POL_B), amps)


def bell_decomposition_residual(spec: SkyrmionSpec, minus_i: bool = True) -> float:
    """Norm of psi2 minus its reassembly from Bell branches.

    The branches are ``(1/2)|beta>_A (P_beta |psi_NL>)`` with Pauli factors
    ``I, sigma_z, sigma_x`` and ``-i sigma_y`` (plain ``sigma_y`` when
    ``minus_i`` is false).
    """
    target = nonlocal_target(spec)
    bell = bell_basis_spin_momentum()
    paulis = {
        "PhiPlus": (1.0, LinearOperator.identity((POL_B,))),
        "PhiMinus": (1.0, LinearOperator.pauli("z", POL_B)),
        "PsiPlus": (1.0, LinearOperator.pauli("x", POL_B)),
        "PsiMinus": (-1j if minus_i else 1.0, LinearOperator.pauli("y", POL_B)),
    }
    lhs = psi2(spec)
    rhs = np.zeros(lhs.dim, dtype=complex)
    for label, (coeff, op) in paulis.items():
        branch = tensor_product(bell[label], apply(op, target))
        rhs += 0.5 * coeff * branch.in_order(lhs.factors)
    return float(np.linalg.norm(lhs.amplitudes - rhs))

