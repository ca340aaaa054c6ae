"""Fidelity, purity, concurrence and quantum discord of two-qubit states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .tensor import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityOperator,
    StateVector,
    TensorError,
    as_density,
    eig_general_4x4,
    eig_hermitian,
)

BELL_DIAGONAL_TOL = 1e-9
# eigenvalues of rho * rho_tilde below this are numerical zeros
_SPECTRUM_FLOOR = 1e-13


@dataclass(frozen=True)
class CorrelationReport:
    fidelity: float
    purity: float
    concurrence: float
    discord: float
    nsk: float
    degenerate: bool

    def __post_init__(self):
        if not 0.25 - 1e-12 <= self.purity <= 1 + 1e-12:
            raise ValueError(f"two-qubit purity outside [1/4, 1]: {self.purity!r}")
        if not 0 <= self.concurrence <= 1 + 1e-12:
            raise ValueError(f"concurrence outside [0, 1]: {self.concurrence!r}")
        if self.discord < 0:
            raise ValueError(f"negative discord: {self.discord!r}")


def purity(rho) -> float:
    m = as_density(rho).entries
    return float(np.einsum("ij,ji->", m, m).real)


def fidelity_pure(psi: StateVector, rho) -> float:
    """sqrt(<psi|rho|psi>)."""
    rho = as_density(rho)
    if psi.factors != rho.factors:
        raise TensorError(f"target spans {psi.factors}, state spans {rho.factors}")
    a = psi.amplitudes
    overlap = float(np.real(a.conj() @ rho.entries @ a))
    return float(np.sqrt(max(overlap, 0.0)))


def fidelity_from_purity_werner(gamma: float) -> float:
    """Fidelity to the Bell state of the Werner state with purity ``gamma``.

    Inverts gamma = a^2 + (1 - a)^2 / 3 for the dominant eigenvalue a = F^2.
    """
    if not 0.25 - 1e-12 <= gamma <= 1 + 1e-12:
        raise ValueError(f"purity must lie in [0.25, 1], got {gamma!r}")
    root = np.sqrt(max(3 * (4 * gamma - 1), 0.0))
    return float(np.sqrt((1 + root) / 4))


def fidelity_flip(lambda1: float, p: float) -> float:
    """sqrt(1 - 3 lambda1 / 4 - (1 - lambda1) p)."""
    for name, v in (("lambda1", lambda1), ("p", p)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
    return float(np.sqrt(1 - 0.75 * lambda1 - (1 - lambda1) * p))


def _two_qubit(rho) -> np.ndarray:
    rho = as_density(rho)
    if rho.dim != 4 or len(rho.factors) != 2:
        raise TensorError("a two-qubit state is required")
    return rho.entries


def wootters_spectrum(rho) -> np.ndarray:
    """Descending eigenvalues of rho (sy x sy) rho* (sy x sy), numerical zeros clipped."""
    m = _two_qubit(rho)
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    vals = eig_general_4x4(m @ yy @ m.conj() @ yy)
    vals = np.sort(vals.real)[::-1]
    return np.where(vals < _SPECTRUM_FLOOR, 0.0, vals)


def concurrence(rho) -> float:
    """Wootters concurrence from the singular values of sqrt(rho) (sy x sy) sqrt(rho)*.

    These singular values are the square roots of :func:`wootters_spectrum`;
    taking them directly avoids the square root of eigenvalues that are only
    known to absolute machine precision.
    """
    m = _two_qubit(rho)
    w, v = eig_hermitian(m)
    if w.min() < -1e-10:
        raise TensorError("concurrence of a non-physical state")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    r = np.linalg.svd(root @ yy @ root.conj(), compute_uv=False)
    return float(max(0.0, r[0] - r[1:].sum()))


def _xlog2x(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _eigvals_2x2(m: np.ndarray) -> np.ndarray:
    a, d = m[0, 0].real, m[1, 1].real
    gap = np.hypot(a - d, 2 * abs(m[0, 1]))
    return np.array([(a + d + gap) / 2, (a + d - gap) / 2])


def von_neumann_entropy(m: np.ndarray) -> float:
    """Entropy in bits; 0 log 0 = 0."""
    if m.shape == (2, 2):
        w = _eigvals_2x2(m)
    else:
        w = eig_hermitian(0.5 * (m + m.conj().T))[0]
    return float(-np.sum(_xlog2x(np.clip(w, 0.0, None))))


def correlation_triple(rho) -> np.ndarray:
    m = _two_qubit(rho)
    return np.array([np.trace(m @ np.kron(s, s)).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def is_bell_diagonal(rho, tol: float = BELL_DIAGONAL_TOL) -> bool:
    m = _two_qubit(rho)
    c = correlation_triple(rho)
    model = (np.eye(4) + sum(ci * np.kron(s, s) for ci, s in zip(c, (SIGMA_X, SIGMA_Y, SIGMA_Z)))) / 4
    return bool(np.max(np.abs(m - model)) <= tol)


def discord_bell_diagonal(rho) -> float:
    """Closed-form discord of a Bell-diagonal state from its correlation triple."""
    if not is_bell_diagonal(rho):
        raise ValueError("state is not Bell-diagonal; use discord_numeric")
    c1, c2, c3 = correlation_triple(rho)
    lam = np.array([
        1 - c1 - c2 - c3,
        1 - c1 + c2 + c3,
        1 + c1 - c2 + c3,
        1 + c1 + c2 - c3,
    ]) / 4
    mutual = 2.0 + float(np.sum(_xlog2x(np.clip(lam, 0.0, None))))
    c = min(max(abs(c1), abs(c2), abs(c3)), 1.0)
    classical = float(np.sum(_xlog2x(np.array([(1 - c) / 2, (1 + c) / 2]))) + 1.0)
    return max(0.0, mutual - classical)


def _marginals(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = m.reshape(2, 2, 2, 2)
    return np.einsum("ajbj->ab", t), np.einsum("iaib->ab", t)


def _conditional_entropy(m: np.ndarray, theta: float, phi: float) -> float:
    """Average entropy of the first qubit after a projective measurement of the second."""
    n = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    n_perp = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
    t = m.reshape(2, 2, 2, 2)
    total = 0.0
    for v in (n, n_perp):
        cond = np.einsum("aibj,i,j->ab", t, v.conj(), v)
        p = float(np.trace(cond).real)
        if p > 1e-15:
            total += p * von_neumann_entropy(cond / p)
    return total


def discord_numeric(rho, n_starts: int = 8, tol: float = 1e-12, seed: int = 0) -> float:
    """Discord with measurement on the second qubit, by multi-start minimization.

    Starts include the three Pauli axes plus ``n_starts - 3`` random Bloch
    directions; each is refined with Nelder-Mead on (theta, phi).
    """
    m = _two_qubit(rho)
    rho_a, rho_b = _marginals(m)
    s_a = von_neumann_entropy(rho_a)
    mutual = s_a + von_neumann_entropy(rho_b) - von_neumann_entropy(m)

    rng = np.random.default_rng(seed)
    starts = [(0.0, 0.0), (np.pi / 2, 0.0), (np.pi / 2, np.pi / 2)]
    while len(starts) < max(n_starts, 3):
        starts.append((np.arccos(rng.uniform(-1, 1)), rng.uniform(0, 2 * np.pi)))
    best = np.inf
    for x0 in starts:
        res = optimize.minimize(
            lambda x: _conditional_entropy(m, x[0], x[1]),
            np.asarray(x0),
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": tol, "maxiter": 2000},
        )
        best = min(best, float(res.fun))
    return max(0.0, mutual - (s_a - best))


def discord(rho) -> float:
    """Closed form when Bell-diagonal, numerical minimization otherwise."""
    if is_bell_diagonal(rho):
        return discord_bell_diagonal(rho)
    return discord_numeric(rho)


def correlation_report(target: StateVector, rho, nsk: float, degenerate: bool, seed: int = 0) -> CorrelationReport:
    """All correlation figures of a two-qubit state, with its skyrmion number attached."""
    return CorrelationReport(
        fidelity=fidelity_pure(target, rho),
        purity=purity(rho),
        concurrence=concurrence(rho),
        discord=discord_bell_diagonal(rho) if is_bell_diagonal(rho) else discord_numeric(rho, seed=seed),
        nsk=nsk,
        degenerate=degenerate,
    )
