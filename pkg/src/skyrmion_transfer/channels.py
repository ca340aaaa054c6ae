"""Noise models: isotropic white noise, local imperfection, Pauli flips on photon B."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import POL_B, DensityOperator, LinearOperator, as_density, embed

AXES = ("x", "y", "z")


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class NoiseParams:
    """Noise knobs for one transfer run.

    ``xi0`` and the ``axis``/``p`` flip act on the entangled link, ``lambda1``
    degrades the local skyrmion, and ``background`` is the uniform
    accidental-coincidence rate used only by tomography.
    """

    xi0: float = 0.0
    p: float = 0.0
    axis: str = "z"
    lambda1: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        _check_unit("xi0", self.xi0)
        _check_unit("p", self.p)
        _check_unit("lambda1", self.lambda1)
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.background < 0:
            raise ValueError(f"background must be >= 0, got {self.background!r}")

    @property
    def is_noiseless(self) -> bool:
        return self.xi0 == 0 and self.p == 0 and self.lambda1 == 0


def _mix_identity(rho, weight: float) -> DensityOperator:
    rho = as_density(rho)
    d = rho.dim
    return DensityOperator(rho.factors, (1 - weight) * rho.entries + weight * np.eye(d) / d)


def isotropic_mix(rho, xi0: float) -> DensityOperator:
    """(1 - xi0) rho + xi0 I/d."""
    return _mix_identity(rho, _check_unit("xi0", xi0))


def local_imperfection(rho, lambda1: float) -> DensityOperator:
    """(1 - lambda1) rho + lambda1 I/d, applied before any flip channel."""
    return _mix_identity(rho, _check_unit("lambda1", lambda1))


def pauli_channel(rho, axis: str, p: float) -> DensityOperator:
    """(1 - p) rho + p S rho S with S = sigma_axis on photon B's polarization."""
    p = _check_unit("p", p)
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    rho = as_density(rho)
    s = embed(LinearOperator.pauli(axis, POL_B), rho.factors)
    out = (1 - p) * rho.entries + p * (s @ rho.entries @ s)
    return DensityOperator(rho.factors, out)


def compose_flip_probability(p: float, q: float) -> float:
    return p + q - 2 * p * q


def poincare_ellipsoid(axis: str, p: float) -> tuple[float, float, float]:
    """Semi-axes (S_x, S_y, S_z) of photon B's Bloch sphere after the flip channel."""
    p = _check_unit("p", p)
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    shrink = abs(1 - 2 * p)
    return tuple(1.0 if a == axis else shrink for a in AXES)
