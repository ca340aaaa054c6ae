"""Quantum Stokes fields on a transverse grid and their skyrmion number.

Photon A's OAM qubit is mapped to a transverse position through the spatial
modes carrying OAM 0 and OAM l. At every pixel the conditional (unnormalized)
2x2 polarization matrix of the other factor gives the Stokes vector.

The skyrmion number is evaluated on the compactified plane: the lattice
Berg-Luscher sum over a disk is closed by fanning the disk boundary to the
far-field spin direction. The open-disk sum and the closure term are both
reported, so finite-aperture values (as quoted from experiments) remain
available alongside the topological integer.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from math import factorial
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage, special

from .tensor import OAM_A, DensityOperator, as_density

FAMILIES = ("laguerre_gauss", "bessel")
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class TransverseGrid:
    """``n`` x ``n`` samples over ``[-extent, extent]^2`` (units of the waist w0)."""

    n: int = 512
    extent: float = 6.0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"grid needs n >= 16, got {self.n}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(x, y)`` arrays indexed ``[iy, ix]``."""
        return np.meshgrid(self.axis, self.axis, indexing="xy")


@dataclass(frozen=True)
class ModeSpec:
    """Spatial mode carrying OAM ``l``.

    ``scale`` is the waist (Laguerre-Gauss, units of w0) or the radial wave
    number k_r (Bessel, units of 1/w0).
    """

    family: str = "laguerre_gauss"
    l: int = 0
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"mode family must be one of {FAMILIES}, got {self.family!r}")
        if not self.scale > 0:
            raise ValueError("mode scale must be positive")


def mode_pair(l: int, family: str = "laguerre_gauss", scale: float = 1.0) -> tuple[ModeSpec, ModeSpec]:
    """Modes for the OAM qubit basis ``(|0>, |l>)``."""
    return ModeSpec(family, 0, scale), ModeSpec(family, l, scale)


def mode_amplitude(spec: ModeSpec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    m = abs(spec.l)
    if spec.family == "laguerre_gauss":
        rho = r / spec.scale
        norm = np.sqrt(2.0 / (np.pi * factorial(m))) / spec.scale
        radial = norm * (np.sqrt(2.0) * rho) ** m * np.exp(-rho**2)
    else:
        radial = special.jv(m, spec.scale * r)
    return radial * np.exp(1j * spec.l * phi)


@functools.lru_cache(maxsize=8)
def _mode_products(modes: tuple[ModeSpec, ModeSpec], grid: TransverseGrid) -> np.ndarray:
    x, y = grid.mesh()
    u = np.stack([mode_amplitude(m, x, y) for m in modes])
    prod = np.einsum("nyx,myx->nmyx", u, u.conj())
    prod.setflags(write=False)
    return prod


def integration_radius(modes: Sequence[ModeSpec], grid: TransverseGrid) -> float:
    """Disk radius for N_sk: the grid extent, or the first zero of J_0 for Bessel modes.

    At that zero the OAM-0 component vanishes, so the texture sits exactly on
    the pole carried by the OAM-l component.
    """
    radius = grid.extent
    for m in modes:
        if m.family == "bessel" and m.l == 0:
            radius = min(radius, special.jn_zeros(0, 1)[0] / m.scale)
    return radius


@dataclass(frozen=True, eq=False)
class StokesField:
    """Per-pixel Stokes vector ``S[i, iy, ix]`` (i = x, y, z) and intensity."""

    grid: TransverseGrid
    S: np.ndarray
    intensity: np.ndarray
    radius: float

    def normalized(self) -> np.ndarray:
        mag = np.linalg.norm(self.S, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(mag > 0, self.S / mag, 0.0)

    def to_csv(self, path) -> Path:
        """Row-major ``x,y,Sx,Sy,Sz,intensity`` with 9 significant digits."""
        path = Path(path)
        x, y = self.grid.mesh()
        cols = np.column_stack(
            [x.ravel(), y.ravel(), self.S[0].ravel(), self.S[1].ravel(), self.S[2].ravel(), self.intensity.ravel()]
        )
        with open(path, "w", newline="") as fh:
            fh.write("x,y,Sx,Sy,Sz,intensity\n")
            np.savetxt(fh, cols, fmt="%.9g", delimiter=",")
        return path


def _stokes(rho: DensityOperator, grid: TransverseGrid, modes, position=OAM_A) -> StokesField:
    rho = as_density(rho)
    if len(rho.factors) != 2 or position not in rho.factors:
        raise ValueError(f"expected a two-qubit state containing {position.value}, got {rho.factors}")
    modes = tuple(modes)
    if len(modes) != 2 or any(not isinstance(m, ModeSpec) for m in modes):
        raise ValueError("need one ModeSpec for OAM 0 and one for OAM l")
    other = next(f for f in rho.factors if f is not position)
    r = rho.in_order((position, other)).reshape(2, 2, 2, 2)
    m = np.einsum("nmyx,nsmt->styx", _mode_products(modes, grid), r)
    s = np.stack([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real])
    intensity = (m[0, 0] + m[1, 1]).real
    return StokesField(grid, s, intensity, integration_radius(modes, grid))


def stokes_local(rho_l, grid: TransverseGrid, modes) -> StokesField:
    """Spin texture of a single photon from its OAM-spin state."""
    return _stokes(rho_l, grid, modes)


def stokes_nonlocal(rho_nl, grid: TransverseGrid, modes) -> StokesField:
    """Photon B's polarization conditioned on photon A's transverse position."""
    return _stokes(rho_nl, grid, modes)


def rotate_field(field: StokesField, rotation: np.ndarray) -> StokesField:
    s = np.einsum("ij,jyx->iyx", rotation, field.S)
    return StokesField(field.grid, s, field.intensity, field.radius)


class SkyrmionNumber(NamedTuple):
    nsk: float
    degenerate: bool
    raw: float = 0.0
    truncation: float = 0.0


def _solid_angle(a, b, c):
    """Signed solid angle of the geodesic triangle (a, b, c); vectors on axis 0."""
    num = np.einsum("i...,i...->...", a, np.cross(b, c, axis=0))
    den = 1.0 + np.einsum("i...,i...->...", a, b) + np.einsum("i...,i...->...", b, c) + np.einsum("i...,i...->...", c, a)
    return 2.0 * np.arctan2(num, den)


def _plaquette_mask(grid: TransverseGrid, radius: float) -> np.ndarray:
    x, y = grid.mesh()
    inside = np.hypot(x, y) <= radius * (1 + 1e-12)
    return inside[:-1, :-1] & inside[:-1, 1:] & inside[1:, :-1] & inside[1:, 1:]


def skyrmion_number(field: StokesField, epsilon: float = DEFAULT_EPSILON) -> SkyrmionNumber:
    """Berg-Luscher skyrmion number over the integration disk, closed at infinity.

    A texture is degenerate when the degree of polarization |S|/intensity
    drops to ``epsilon`` or below anywhere in the disk, or when two
    neighboring pixels point to antipodal directions (a zero of the field
    between them).
    """
    mask = _plaquette_mask(field.grid, field.radius)
    if not mask.any():
        raise ValueError("integration disk contains no plaquettes")
    vert = np.zeros(field.intensity.shape, dtype=bool)
    for dy in (0, 1):
        for dx in (0, 1):
            vert[dy:dy + mask.shape[0], dx:dx + mask.shape[1]] |= mask
    mag = np.linalg.norm(field.S, axis=0)
    if np.any(mag[vert] <= epsilon * field.intensity[vert]) or np.any(mag[vert] == 0):
        return SkyrmionNumber(0.0, True)

    s = field.normalized()
    c1, c2, c3, c4 = s[:, :-1, :-1], s[:, :-1, 1:], s[:, 1:, 1:], s[:, 1:, :-1]
    for a, b in ((c1, c2), (c2, c3), (c3, c4), (c4, c1), (c1, c3)):
        if np.any(np.einsum("iyx,iyx->yx", a, b)[mask] <= -1.0 + epsilon):
            return SkyrmionNumber(0.0, True)

    tri = _solid_angle(c1, c2, c3) + _solid_angle(c1, c3, c4)
    interior = float(np.sum(tri[mask]))

    # counter-clockwise boundary edges of the union of plaquettes
    pad = np.pad(mask, 1)
    inner = pad[1:-1, 1:-1]
    edges = (
        (inner & ~pad[:-2, 1:-1], c1, c2),  # bottom
        (inner & ~pad[1:-1, 2:], c2, c3),  # right
        (inner & ~pad[2:, 1:-1], c3, c4),  # top
        (inner & ~pad[1:-1, :-2], c4, c1),  # left
    )
    tails = np.concatenate([a[:, sel] for sel, a, _ in edges], axis=1)
    heads = np.concatenate([b[:, sel] for sel, _, b in edges], axis=1)
    pole = tails.sum(axis=1)
    pole /= np.linalg.norm(pole)
    closure = -float(np.sum(_solid_angle(pole[:, None], tails, heads)))

    four_pi = 4.0 * np.pi
    return SkyrmionNumber((interior + closure) / four_pi, False, interior / four_pi, closure / four_pi)


def _boundary_loop(field: StokesField, radius: float, samples: int) -> np.ndarray:
    """Stokes vectors interpolated on a counter-clockwise circle, shape (3, samples)."""
    t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    h = field.grid.spacing
    ix = (radius * np.cos(t) + field.grid.extent) / h
    iy = (radius * np.sin(t) + field.grid.extent) / h
    return np.stack([ndimage.map_coordinates(c, [iy, ix], order=3, mode="nearest") for c in field.S])


def _loop_solid_angle(loop: np.ndarray) -> float:
    """Solid angle swept around the mean loop direction: the integral of (1 - cos theta) d(alpha)."""
    s = loop / np.linalg.norm(loop, axis=0)
    pole = s.mean(axis=1)
    pole /= np.linalg.norm(pole)
    ref = np.array([1.0, 0.0, 0.0]) if abs(pole[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = ref - ref.dot(pole) * pole
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(pole, e1)
    cos_t = pole @ s
    alpha = np.arctan2(e2 @ s, e1 @ s)
    d_alpha = np.angle(np.exp(1j * np.diff(np.append(alpha, alpha[0]))))
    one_minus = 1.0 - cos_t
    mid = 0.5 * (one_minus + np.roll(one_minus, -1))
    return float(np.sum(mid * d_alpha))


def skyrmion_number_fd(field: StokesField, loop_samples: int = 4096) -> float:
    """Finite-difference integral of s . (d_x s x d_y s) / 4 pi, closed at infinity.

    Independent cross-check of :func:`skyrmion_number`: central differences on
    pixels inside the disk, plus a line-integral closure along an interpolated
    circle.
    """
    if skyrmion_number(field).degenerate:
        raise ValueError("finite-difference skyrmion number is undefined for a degenerate texture")
    h = field.grid.spacing
    radius = min(field.radius, field.grid.extent - 2 * h)
    s = field.normalized()
    ds_dy, ds_dx = np.gradient(s, h, axis=(1, 2))
    density = np.einsum("iyx,iyx->yx", s, np.cross(ds_dx, ds_dy, axis=0))
    x, y = field.grid.mesh()
    interior = float(np.sum(density[np.hypot(x, y) <= radius]) * h * h)
    closure = -_loop_solid_angle(_boundary_loop(field, radius, loop_samples))
    return (interior + closure) / (4 * np.pi)


def boundary_winding(field: StokesField, samples: int = 4096, radius: float | None = None) -> float:
    """Total phase advance of S_x + i S_y around the disk boundary (radians)."""
    h = field.grid.spacing
    radius = min(field.radius, field.grid.extent - 2 * h) if radius is None else radius
    loop = _boundary_loop(field, radius, samples)
    phase = np.angle(loop[0] + 1j * loop[1])
    return float(np.sum(np.angle(np.exp(1j * np.diff(np.append(phase, phase[0]))))))
