"""Labeled multi-qubit tensor spaces.

States and operators carry an ordered tuple of :class:`FactorLabel` so that
partial traces, operator padding and projections never depend on the caller
remembering an axis order. Every constructor normalizes factors into the
canonical order ``spin_A, momentum_A, oam_A, pol_B``.

Basis conventions (index 0 / index 1):

* ``spin_A``     -- L (spin-up) / R (spin-down)
* ``momentum_A`` -- k1 / k2
* ``oam_A``      -- OAM 0 / OAM l
* ``pol_B``      -- H / V

Pauli matrices use ``sigma_z |0> = +|0>`` on every factor, and
``|L> = (|H> + i|V>)/sqrt(2)`` is the +1 eigenstate of ``sigma_y``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
NORM_TOL = 1e-12


class TensorError(ValueError):
    """Raised on inconsistent factor labels or dimensions."""


class FactorLabel(enum.Enum):
    SPIN_A = "spin_A"
    MOMENTUM_A = "momentum_A"
    OAM_A = "oam_A"
    POL_B = "pol_B"

    @property
    def dim(self) -> int:
        return 2

    @property
    def rank(self) -> int:
        return _CANONICAL.index(self)

    def __repr__(self) -> str:
        return self.value


_CANONICAL = (FactorLabel.SPIN_A, FactorLabel.MOMENTUM_A, FactorLabel.OAM_A, FactorLabel.POL_B)

SPIN_A = FactorLabel.SPIN_A
MOMENTUM_A = FactorLabel.MOMENTUM_A
OAM_A = FactorLabel.OAM_A
POL_B = FactorLabel.POL_B

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def _check_labels(factors: Sequence[FactorLabel]) -> tuple[FactorLabel, ...]:
    factors = tuple(FactorLabel(f) for f in factors)
    if len(set(factors)) != len(factors):
        raise TensorError(f"duplicate factor labels in {factors}")
    if not factors:
        raise TensorError("at least one factor is required")
    return factors


def canonical_order(factors: Iterable[FactorLabel]) -> tuple[FactorLabel, ...]:
    return tuple(sorted(factors, key=lambda f: f.rank))


def _dims(factors: Sequence[FactorLabel]) -> tuple[int, ...]:
    return tuple(f.dim for f in factors)


def _permute_vector(vec: np.ndarray, src, dst) -> np.ndarray:
    if tuple(src) == tuple(dst):
        return vec
    t = vec.reshape(_dims(src))
    t = np.transpose(t, [src.index(f) for f in dst])
    return t.reshape(-1)


def _permute_matrix(mat: np.ndarray, src, dst) -> np.ndarray:
    if tuple(src) == tuple(dst):
        return mat
    n = len(src)
    t = mat.reshape(_dims(src) * 2)
    axes = [src.index(f) for f in dst]
    t = np.transpose(t, axes + [a + n for a in axes])
    d = int(np.prod(_dims(dst)))
    return t.reshape(d, d)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state; amplitudes are stored in canonical factor order."""

    factors: tuple[FactorLabel, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        factors = _check_labels(self.factors)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(_dims(factors))):
            raise TensorError(f"{amps.size} amplitudes do not match factors {factors}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise TensorError(f"state is not normalized (|psi|^2 = {norm!r})")
        canon = canonical_order(factors)
        amps = _permute_vector(amps, factors, canon).copy()
        amps.setflags(write=False)
        object.__setattr__(self, "factors", canon)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, factors, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(factors, amps / np.linalg.norm(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def in_order(self, factors: Sequence[FactorLabel]) -> np.ndarray:
        """Amplitudes re-expressed in an arbitrary factor order."""
        factors = _check_labels(factors)
        if set(factors) != set(self.factors):
            raise TensorError(f"cannot reorder {self.factors} as {factors}")
        return _permute_vector(self.amplitudes, self.factors, factors)

    def density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.factors, np.outer(a, a.conj()))

    def inner(self, other: "StateVector") -> complex:
        if self.factors != other.factors:
            raise TensorError("inner product between different factor spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Mixed state: Hermitian, unit trace, positive semidefinite."""

    factors: tuple[FactorLabel, ...]
    entries: np.ndarray

    def __post_init__(self):
        factors = _check_labels(self.factors)
        mat = np.asarray(self.entries, dtype=complex)
        d = int(np.prod(_dims(factors)))
        if mat.shape != (d, d):
            raise TensorError(f"matrix shape {mat.shape} does not match factors {factors}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise TensorError("density operator is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise TensorError(f"density operator trace is {tr!r}, not 1")
        if np.linalg.eigvalsh(mat).min() < PSD_TOL:
            raise TensorError("density operator has negative eigenvalues")
        canon = canonical_order(factors)
        mat = _permute_matrix(mat, factors, canon).copy()
        mat.setflags(write=False)
        object.__setattr__(self, "factors", canon)
        object.__setattr__(self, "entries", mat)

    @classmethod
    def maximally_mixed(cls, factors) -> "DensityOperator":
        factors = _check_labels(factors)
        d = int(np.prod(_dims(factors)))
        return cls(factors, np.eye(d, dtype=complex) / d)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def in_order(self, factors: Sequence[FactorLabel]) -> np.ndarray:
        factors = _check_labels(factors)
        if set(factors) != set(self.factors):
            raise TensorError(f"cannot reorder {self.factors} as {factors}")
        return _permute_matrix(self.entries, self.factors, factors)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    factors: tuple[FactorLabel, ...]
    entries: np.ndarray

    def __post_init__(self):
        factors = _check_labels(self.factors)
        mat = np.asarray(self.entries, dtype=complex)
        d = int(np.prod(_dims(factors)))
        if mat.shape != (d, d):
            raise TensorError(f"operator shape {mat.shape} does not match factors {factors}")
        canon = canonical_order(factors)
        mat = _permute_matrix(mat, factors, canon).copy()
        mat.setflags(write=False)
        object.__setattr__(self, "factors", canon)
        object.__setattr__(self, "entries", mat)

    @classmethod
    def pauli(cls, axis: str, factor: FactorLabel) -> "LinearOperator":
        return cls((factor,), PAULI[axis])

    @classmethod
    def identity(cls, factors) -> "LinearOperator":
        factors = _check_labels(factors)
        return cls(factors, np.eye(int(np.prod(_dims(factors))), dtype=complex))

    @property
    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.factors, self.entries.conj().T)

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        factors = canonical_order(set(self.factors) | set(other.factors))
        return LinearOperator(factors, embed(self, factors) @ embed(other, factors))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tol)


def kron(*ops: LinearOperator) -> LinearOperator:
    """Tensor product of operators on disjoint factors."""
    factors: tuple[FactorLabel, ...] = ()
    mat = np.ones((1, 1), dtype=complex)
    for op in ops:
        factors = factors + op.factors
        mat = np.kron(mat, op.entries)
    return LinearOperator(_check_labels(factors), mat)


def embed(op: LinearOperator, factors: Sequence[FactorLabel]) -> np.ndarray:
    """Matrix of ``op`` padded with identities onto ``factors`` (canonical order)."""
    factors = canonical_order(_check_labels(factors))
    missing = [f for f in op.factors if f not in factors]
    if missing:
        raise TensorError(f"operator acts on {missing}, absent from {factors}")
    rest = tuple(f for f in factors if f not in op.factors)
    mat = op.entries
    if rest:
        mat = np.kron(mat, np.eye(int(np.prod(_dims(rest))), dtype=complex))
    return _permute_matrix(mat, op.factors + rest, factors)


def tensor_product(a, b):
    """Kronecker product of two states (both kets or both density operators)."""
    if set(a.factors) & set(b.factors):
        raise TensorError(f"factor labels overlap: {a.factors} and {b.factors}")
    factors = a.factors + b.factors
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(factors, np.kron(a.amplitudes, b.amplitudes))
    a = a.density() if isinstance(a, StateVector) else a
    b = b.density() if isinstance(b, StateVector) else b
    return DensityOperator(factors, np.kron(a.entries, b.entries))


def as_density(state) -> DensityOperator:
    return state.density() if isinstance(state, StateVector) else state


def partial_trace(rho, keep: Iterable[FactorLabel]) -> DensityOperator:
    rho = as_density(rho)
    keep = set(FactorLabel(k) for k in keep)
    if not keep:
        raise TensorError("keep must be nonempty")
    unknown = keep - set(rho.factors)
    if unknown:
        raise TensorError(f"unknown factors {sorted(f.value for f in unknown)}")
    if keep == set(rho.factors):
        return rho
    n = len(rho.factors)
    t = rho.entries.reshape(_dims(rho.factors) * 2)
    letters = "abcdefgh"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i, f in enumerate(rho.factors):
        if f not in keep:
            col[i] = row[i]
    kept = [i for i, f in enumerate(rho.factors) if f in keep]
    out = "".join(row[i] for i in kept) + "".join(col[i] for i in kept)
    t = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    factors = tuple(rho.factors[i] for i in kept)
    d = int(np.prod(_dims(factors)))
    mat = t.reshape(d, d)
    return DensityOperator(factors, 0.5 * (mat + mat.conj().T))


def expectation(rho, op: LinearOperator) -> complex:
    """Tr(rho O), with O padded by identities on factors it does not touch."""
    rho = as_density(rho)
    return complex(np.trace(rho.entries @ embed(op, rho.factors)))


def apply(op: LinearOperator, psi: StateVector) -> StateVector:
    return StateVector(psi.factors, embed(op, psi.factors) @ psi.amplitudes)


def conjugate(op: LinearOperator, rho) -> DensityOperator:
    """O rho O^dagger for unitary O."""
    rho = as_density(rho)
    m = embed(op, rho.factors)
    out = m @ rho.entries @ m.conj().T
    return DensityOperator(rho.factors, 0.5 * (out + out.conj().T))


def mix(weights: Sequence[float], states: Sequence[DensityOperator]) -> DensityOperator:
    factors = states[0].factors
    if any(s.factors != factors for s in states):
        raise TensorError("cannot mix states over different factors")
    mat = sum(w * s.entries for w, s in zip(weights, states))
    return DensityOperator(factors, mat)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    mag = abs(apq)
    phase = apq / mag
    theta = 0.5 * np.arctan2(2.0 * mag, (a[p, p] - a[q, q]).real)
    c, s = np.cos(theta), np.sin(theta)
    # U = diag(1, conj(phase)) R on the (p, q) block
    u = np.array([[c, -s], [s * phase.conjugate(), c * phase.conjugate()]])
    idx = [p, q]
    a[:, idx] = a[:, idx] @ u
    a[idx, :] = u.conj().T @ a[idx, :]
    v[:, idx] = v[:, idx] @ u


def eig_hermitian(m, tol: float = 1e-10, max_sweeps: int = 100):
    """Cyclic complex Jacobi eigensolver for small Hermitian matrices.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as columns.
    """
    mat = np.array(m.entries if isinstance(m, (LinearOperator, DensityOperator)) else m, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise TensorError("eig_hermitian needs a square matrix")
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > tol:
        raise TensorError("matrix is not Hermitian")
    n = mat.shape[0]
    a = 0.5 * (mat + mat.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 1e-300:
                    _jacobi_rotate(a, v, p, q)
    w = np.diag(a).real
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eig_general_4x4(m) -> np.ndarray:
    """Eigenvalues of a general (non-Hermitian) 4x4 matrix."""
    mat = np.asarray(m.entries if isinstance(m, (LinearOperator, DensityOperator)) else m, dtype=complex)
    if mat.shape != (4, 4):
        raise TensorError(f"expected a 4x4 matrix, got {mat.shape}")
    return np.linalg.eigvals(mat)
