"""Two-qubit state tomography from simulated coincidence counts.

Counts follow a Poisson model with a uniform accidental background.
Reconstruction is linear inversion, projection onto the physical states,
then diluted R rho R maximum-likelihood refinement. Error bars come from
Poisson resampling of the observed counts.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .tensor import OAM_A, POL_B, DensityOperator, FactorLabel, as_density, eig_hermitian

log = logging.getLogger(__name__)

_EIGENSTATES = {
    ("Z", +1): np.array([1, 0], dtype=complex),
    ("Z", -1): np.array([0, 1], dtype=complex),
    ("X", +1): np.array([1, 1], dtype=complex) / np.sqrt(2),
    ("X", -1): np.array([1, -1], dtype=complex) / np.sqrt(2),
    ("Y", +1): np.array([1, 1j], dtype=complex) / np.sqrt(2),
    ("Y", -1): np.array([1, -1j], dtype=complex) / np.sqrt(2),
}
BASES = ("Z", "X", "Y")

MAX_ITER = 5000
# trace-norm step below which the iteration is considered settled
TOL = 1e-10
# weight of the maximally mixed state blended into the R rho R starting point
START_MIX = 1e-3
MIN_DILUTION = 1e-12
MAX_DILUTION = 1e3
# proven distance of the log-likelihood from its maximum, see optimality_gap, per
# recorded count; rounding in the gradient keeps it from going much below 1e-8
GAP_TOL = 1e-7
# looser bound accepted once no ascent step survives rounding
STALL_GAP_TOL = 1e-5


class TomographyError(RuntimeError):
    pass


@dataclass(frozen=True)
class MeasurementSetting:
    """Product projector; each side is a (basis letter, eigenvalue) pair."""

    basis_a: str
    eig_a: int
    basis_b: str
    eig_b: int

    def __post_init__(self):
        for key in ((self.basis_a, self.eig_a), (self.basis_b, self.eig_b)):
            if key not in _EIGENSTATES:
                raise ValueError(f"unknown projector {key}")

    @property
    def basis_pair(self) -> tuple[str, str]:
        return self.basis_a, self.basis_b

    @property
    def projector_a(self) -> np.ndarray:
        v = _EIGENSTATES[self.basis_a, self.eig_a]
        return np.outer(v, v.conj())

    @property
    def projector_b(self) -> np.ndarray:
        v = _EIGENSTATES[self.basis_b, self.eig_b]
        return np.outer(v, v.conj())

    def vector(self) -> np.ndarray:
        return np.kron(_EIGENSTATES[self.basis_a, self.eig_a], _EIGENSTATES[self.basis_b, self.eig_b])

    def projector(self) -> np.ndarray:
        v = self.vector()
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class CountRecord:
    setting: MeasurementSetting
    counts: float
    exposure: float
    background_rate: float = 0.0

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError("counts must be nonnegative")


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityOperator
    iterations: int
    loglik: float
    physical_projection_applied: bool
    converged: bool = True
    loglik_history: tuple[float, ...] = ()


def settings_two_qubit() -> list[MeasurementSetting]:
    """All 36 products of the Pauli eigenprojectors, grouped by basis pair."""
    out = []
    for ba, bb in product(BASES, BASES):
        for ea, eb in product((+1, -1), (+1, -1)):
            out.append(MeasurementSetting(ba, ea, bb, eb))
    return out


def measurement_matrix(settings: Sequence[MeasurementSetting]) -> np.ndarray:
    """Rows map the 16 real coordinates of a Hermitian matrix to Tr(X Pi_k)."""
    basis = _hermitian_basis()
    return np.array([[np.trace(b @ s.projector()).real for b in basis] for s in settings])


def _hermitian_basis() -> list[np.ndarray]:
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    return [np.kron(a, b).astype(complex) for a in paulis for b in paulis]


def _rho_matrix(rho, factors) -> np.ndarray:
    rho = as_density(rho)
    if rho.dim != 4:
        raise ValueError("tomography is implemented for two-qubit states")
    return rho.in_order(factors)


def expected_counts(rho, settings, exposure: float, background_rate: float = 0.0, factors=(OAM_A, POL_B)) -> np.ndarray:
    m = _rho_matrix(rho, factors)
    probs = np.array([np.real(np.vdot(s.vector(), m @ s.vector())) for s in settings])
    return exposure * np.clip(probs, 0.0, None) + background_rate * exposure


def simulate_counts(
    rho,
    settings: Sequence[MeasurementSetting],
    exposure: float,
    background_rate: float = 0.0,
    seed: int = 0,
    factors=(OAM_A, POL_B),
    exact: bool = False,
) -> list[CountRecord]:
    """Poisson coincidence counts per setting; ``exact`` returns the means instead."""
    if exposure <= 0:
        raise ValueError("exposure must be positive")
    mu = expected_counts(rho, settings, exposure, background_rate, factors)
    counts = mu if exact else np.random.default_rng(seed).poisson(mu).astype(float)
    return [CountRecord(s, float(c), float(exposure), float(background_rate)) for s, c in zip(settings, counts)]


def _counts(records: Sequence[CountRecord]) -> np.ndarray:
    return np.array([r.counts for r in records], dtype=float)


def reconstruct_linear(records: Sequence[CountRecord], factors=(OAM_A, POL_B)) -> ReconstructionResult:
    """Least-squares inversion of Tr(X Pi_k) = n_k, normalized to unit trace.

    The result is Hermitian but may be non-positive; it is wrapped only after
    projection, and ``physical_projection_applied`` records whether that
    changed anything.
    """
    settings = [r.setting for r in records]
    a = measurement_matrix(settings)
    if np.linalg.matrix_rank(a) < 16:
        raise TomographyError("measurement settings are not informationally complete")
    coords, *_ = np.linalg.lstsq(a, _counts(records), rcond=None)
    x = sum(c * b for c, b in zip(coords, _hermitian_basis()))
    tr = np.trace(x).real
    if tr <= 0:
        raise TomographyError("reconstructed matrix has nonpositive trace")
    x = x / tr
    x = 0.5 * (x + x.conj().T)
    w = eig_hermitian(x)[0]
    projected = w.min() < -1e-12
    rho = project_physical(x, factors)
    return ReconstructionResult(rho, 0, loglik(records, rho, factors), projected)


def project_physical(m, factors=(OAM_A, POL_B)) -> DensityOperator:
    """Closest density matrix in 2-norm to a unit-trace Hermitian matrix.

    Eigenvalues are sorted, the most negative ones are zeroed and their
    weight is spread evenly over the remaining ones until all are nonnegative.
    """
    m = np.asarray(m, dtype=complex)
    m = 0.5 * (m + m.conj().T)
    m = m / np.trace(m).real
    w, v = eig_hermitian(m)
    if w.min() >= 0:
        out = w
    else:
        d = len(w)
        out = np.zeros(d)
        acc = 0.0
        i = d - 1
        while i >= 0 and w[i] + acc / (i + 1) < 0:
            acc += w[i]
            i -= 1
        out[: i + 1] = w[: i + 1] + acc / (i + 1)
    rho = (v * out) @ v.conj().T
    return DensityOperator(tuple(factors), 0.5 * (rho + rho.conj().T))


def _model(records: Sequence[CountRecord]):
    vecs = np.array([r.setting.vector() for r in records])
    groups = {}
    for k, r in enumerate(records):
        groups.setdefault(r.setting.basis_pair, []).append(k)
    return vecs, [np.array(idx) for idx in groups.values()]


def _probabilities(vecs: np.ndarray, m: np.ndarray) -> np.ndarray:
    return np.einsum("ki,ij,kj->k", vecs.conj(), m, vecs).real


def _loglik(n: np.ndarray, probs: np.ndarray, groups) -> float:
    total = 0.0
    for idx in groups:
        q = np.clip(probs[idx], 1e-300, None)
        q = q / q.sum()
        total += float(np.sum(np.where(n[idx] > 0, n[idx] * np.log(q), 0.0)))
    return total


def optimality_gap(n: np.ndarray, probs: np.ndarray, weights: np.ndarray) -> float:
    """Upper bound on max log-likelihood minus the current one.

    The likelihood is concave in rho and its gradient G = sum n_k / p_k P_k satisfies
    Tr(G rho) = sum n_k, so no state beats the current one by more than
    lambda_max(G) - sum n_k.
    """
    grad = np.einsum("k,kij->ij", n / probs, weights)
    return max(0.0, float(np.linalg.eigvalsh(grad)[-1]) - float(n.sum()))


def loglik(records: Sequence[CountRecord], rho, factors=(OAM_A, POL_B)) -> float:
    """Multinomial log-likelihood of the counts within each basis pair.

    Accidental coincidences are not subtracted: like an analyst who does not
    know the background, the model attributes every count to the state.
    """
    vecs, groups = _model(records)
    return _loglik(_counts(records), _probabilities(vecs, _rho_matrix(rho, factors)), groups)


@dataclass
class _Likelihood:
    """Counts and measurement vectors shared by the maximizers."""

    n: np.ndarray
    vecs: np.ndarray
    groups: list
    weights: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[CountRecord]) -> "_Likelihood":
        vecs, groups = _model(records)
        return cls(_counts(records), vecs, groups, np.einsum("ki,kj->kij", vecs, vecs.conj()))

    @property
    def total(self) -> float:
        return float(self.n.sum())

    def probs(self, m: np.ndarray) -> np.ndarray:
        return np.clip(_probabilities(self.vecs, m), 1e-300, None)

    def value(self, m: np.ndarray) -> float:
        return _loglik(self.n, _probabilities(self.vecs, m), self.groups)

    def gradient(self, m: np.ndarray) -> np.ndarray:
        return np.einsum("k,kij->ij", self.n / self.probs(m), self.weights)

    def gap(self, m: np.ndarray) -> float:
        return optimality_gap(self.n, self.probs(m), self.weights)


def _rhor(lk: _Likelihood, rho: np.ndarray, max_iter: int, tol: float, gap_limit: float):
    """Diluted R rho R: the dilution halves whenever the likelihood would drop and relaxes after each accepted step."""
    eye = np.eye(rho.shape[0])
    current = lk.value(rho)
    history = [current]
    eps = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        if lk.gap(rho) <= gap_limit:
            return rho, it - 1, True, history
        # R is the gradient over the total count: Tr(R rho) = 1 and R = I at an interior optimum
        r = lk.gradient(rho) / lk.total
        step = None
        while eps >= MIN_DILUTION:
            g = (eye + eps * r) / (1 + eps)
            cand = g @ rho @ g.conj().T
            cand = cand / np.trace(cand).real
            cand = 0.5 * (cand + cand.conj().T)
            cand_ll = lk.value(cand)
            if cand_ll >= current:
                step = cand, cand_ll
                break
            eps *= 0.5
        if step is None:
            return rho, it, lk.gap(rho) <= STALL_GAP_TOL * lk.total, history
        delta = float(np.abs(np.linalg.eigvalsh(step[0] - rho)).sum())
        rho, current = step
        history.append(current)
        eps = min(2 * eps, MAX_DILUTION)
        if delta < tol:
            return rho, it, True, history
    return rho, it, lk.gap(rho) <= gap_limit, history


def _projected_gradient(lk: _Likelihood, rho: np.ndarray, max_iter: int, tol: float, gap_limit: float, factors):
    """Accelerated projected gradient ascent; momentum restarts whenever a step would lower the likelihood."""
    eye = np.eye(rho.shape[0])

    def project(m):
        # shift, not rescale, onto unit trace so the result is the Euclidean projection
        m = 0.5 * (m + m.conj().T)
        return project_physical(m - (np.trace(m).real - 1) * eye / len(eye), factors).entries

    current = lk.value(rho)
    history = [current]
    step = 1.0 / lk.total
    prev = rho
    theta = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        if lk.gap(rho) <= gap_limit:
            return rho, it - 1, True, history
        theta_next = 0.5 * (1 + np.sqrt(1 + 4 * theta**2))
        y = rho
        if theta > 1:
            y = rho + ((theta - 1) / theta_next) * (rho - prev)
            if np.linalg.eigvalsh(y)[0] < 0:
                y, theta_next = rho, 1.0
        grad_y = lk.gradient(y)
        f_y = current if y is rho else lk.value(y)
        while True:
            cand = project(y + step * grad_y)
            diff = cand - y
            cand_ll = lk.value(cand)
            # sufficient-ascent test of the quadratic model around y
            model = f_y + float(np.real(np.vdot(grad_y, diff))) - float(np.real(np.vdot(diff, diff))) / (2 * step)
            if cand_ll >= model or step < 1e-30:
                break
            step *= 0.5
        if cand_ll < current:
            if y is rho:
                return rho, it, lk.gap(rho) <= STALL_GAP_TOL * lk.total, history
            prev, theta = rho, 1.0
            continue
        delta = float(np.abs(np.linalg.eigvalsh(cand - rho)).sum())
        prev, rho, current, theta = rho, cand, cand_ll, theta_next
        history.append(current)
        step *= 1.5
        if delta < tol:
            return rho, it, True, history
    return rho, it, lk.gap(rho) <= gap_limit, history


MLE_METHODS = ("rhor", "projected_gradient")


def mle_refine(
    records: Sequence[CountRecord],
    initial,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    factors=(OAM_A, POL_B),
    gap_tol: float = GAP_TOL,
    method: str = "rhor",
) -> ReconstructionResult:
    """Maximum-likelihood refinement of ``initial``.

    Accepted iterates never lower the likelihood. Iteration stops when a step
    moves the state by less than ``tol`` in trace norm, or when
    ``optimality_gap`` proves the likelihood is within ``gap_tol`` per count
    of its maximum. A stall at rounding level counts as converged only if the
    gap is below ``STALL_GAP_TOL`` per count.
    """
    if method not in MLE_METHODS:
        raise ValueError(f"method must be one of {MLE_METHODS}, got {method!r}")
    rho = _rho_matrix(initial, factors).copy()
    lk = _Likelihood.from_records(records)
    if max_iter <= 0:
        current = lk.value(rho)
        return ReconstructionResult(DensityOperator(tuple(factors), rho), 0, current, False, False, (current,))
    gap_limit = gap_tol * lk.total
    if method == "rhor":
        rho, it, converged, history = _rhor(lk, rho, max_iter, tol, gap_limit)
    else:
        rho, it, converged, history = _projected_gradient(lk, rho, max_iter, tol, gap_limit, factors)
    if not converged:
        log.warning("likelihood maximization stopped after %d iterations without converging", it)
    return ReconstructionResult(DensityOperator(tuple(factors), rho), it, history[-1], False, converged, tuple(history))


def reconstruct(
    records: Sequence[CountRecord],
    factors=(OAM_A, POL_B),
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    method: str = "rhor",
) -> ReconstructionResult:
    """Linear inversion, physical projection, then maximum likelihood."""
    linear = reconstruct_linear(records, factors)
    start = linear.rho.entries
    d = start.shape[0]
    lk = _Likelihood.from_records(records)
    # R rho R never repopulates an exact null space, so a rank-deficient start
    # that is not already optimal gets a little of the maximally mixed state
    if method == "rhor" and np.linalg.eigvalsh(start)[0] < START_MIX / d and lk.gap(start) > GAP_TOL * lk.total:
        start = (1 - START_MIX) * start + START_MIX * np.eye(d) / d
    refined = mle_refine(records, DensityOperator(tuple(factors), start), max_iter, tol, factors, method=method)
    return ReconstructionResult(
        refined.rho,
        refined.iterations,
        refined.loglik,
        linear.physical_projection_applied,
        refined.converged,
        refined.loglik_history,
    )


def monte_carlo_reconstructions(
    records: Sequence[CountRecord],
    M: int = 50,
    seed: int = 0,
    factors=(OAM_A, POL_B),
    max_iter: int = MAX_ITER,
) -> list[DensityOperator]:
    """Reconstructions of M Poisson resamplings of the observed counts.

    Replica k draws from ``default_rng([seed, k])``. Replicas whose
    reconstruction fails are dropped; more than 10% dropped is an error.
    """
    if M < 10:
        raise ValueError("need at least 10 Monte-Carlo replicas")
    observed = _counts(records)
    out = []
    dropped = 0
    for k in range(M):
        resampled = np.random.default_rng([seed, k]).poisson(observed).astype(float)
        replica = [CountRecord(r.setting, c, r.exposure, r.background_rate) for r, c in zip(records, resampled)]
        try:
            out.append(reconstruct(replica, factors, max_iter=max_iter).rho)
        except (TomographyError, ValueError, np.linalg.LinAlgError) as exc:
            log.debug("replica %d dropped: %s", k, exc)
            dropped += 1
    if dropped > 0.1 * M:
        raise TomographyError(f"{dropped} of {M} Monte-Carlo replicas failed to reconstruct")
    return out


def monte_carlo_uncertainty(
    records: Sequence[CountRecord],
    functional: Callable[[DensityOperator], float],
    M: int = 50,
    seed: int = 0,
    factors=(OAM_A, POL_B),
    max_iter: int = MAX_ITER,
) -> tuple[float, float]:
    """Mean and sample standard deviation of ``functional`` over resampled reconstructions."""
    values = np.array([float(functional(r)) for r in monte_carlo_reconstructions(records, M, seed, factors, max_iter)])
    return float(values.mean()), float(values.std(ddof=1))


def write_counts_csv(records: Sequence[CountRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["basisA", "eigA", "basisB", "eigB", "counts", "exposure"])
        for r in records:
            s = r.setting
            w.writerow([s.basis_a, f"{s.eig_a:+d}", s.basis_b, f"{s.eig_b:+d}", f"{r.counts:.12g}", f"{r.exposure:.12g}"])
    return path


def read_counts_csv(path, background_rate: float = 0.0) -> list[CountRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        CountRecord(
            MeasurementSetting(row["basisA"], int(row["eigA"]), row["basisB"], int(row["eigB"])),
            float(row["counts"]),
            float(row["exposure"]),
            background_rate,
        )
        for row in rows
    ]


def write_density_csv(rho: DensityOperator, path) -> Path:
    path = Path(path)
    m = rho.entries
    with open(path, "w", newline="") as fh:
        fh.write("row,col,re,im\n")
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                fh.write(f"{i},{j},{m[i, j].real:.12g},{m[i, j].imag:.12g}\n")
    return path


def read_density_csv(path, factors: Sequence[FactorLabel] = (OAM_A, POL_B)) -> DensityOperator:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    d = int(round(np.sqrt(len(rows))))
    m = np.zeros((d, d), dtype=complex)
    for row in rows:
        m[int(row["row"]), int(row["col"])] = float(row["re"]) + 1j * float(row["im"])
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(tuple(factors), m / np.trace(m).real)
