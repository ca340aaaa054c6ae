"""Acceptance criteria: each check returns its measured value, tolerance and runtime."""

from __future__ import annotations

import contextlib
import functools
import io
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import tomography as tomo
from .channels import isotropic_mix, pauli_channel, poincare_ellipsoid
from .config import RunConfig
from .correlations import (
    concurrence,
    discord_bell_diagonal,
    discord_numeric,
    fidelity_from_purity_werner,
    fidelity_pure,
    purity,
)
from .states import BELL_LABELS, SkyrmionSpec, bell_decomposition_residual, nonlocal_target
from .sweeps import FLIP_NEAR_THRESHOLD, FLIP_THRESHOLD, WERNER_THRESHOLD, SweepRow, sweep_flip, sweep_isotropic
from .tensor import OAM_A, POL_B, SIGMA_X, SIGMA_Y, SIGMA_Z, DensityOperator
from .texture import mode_pair, skyrmion_number, skyrmion_number_fd, stokes_nonlocal
from .transfer import transfer_pipeline

ISOTROPIC_ROBUST = np.round(np.arange(0.0, 0.951, 0.05), 12)
FLIP_ROBUST = tuple(np.round(np.arange(0.0, 0.49, 0.025), 12)) + (FLIP_NEAR_THRESHOLD,)
BACKGROUNDS = (0.0, 0.05, 0.1, 0.15, 0.2)
# statistical checks draw from fixed seeds so pass/fail never depends on --seed
STAT_SEED = 0


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: str
    tolerance: str
    runtime: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:>2} {self.name}: {self.measured} (tolerance {self.tolerance}; {self.runtime:.2f} s)"


def _timed(number: int, name: str, budget: float | None = None):
    """Wrap a check returning (passed, measured, tolerance); a runtime budget is part of passing."""

    def wrap(fn: Callable[..., tuple[bool, str, str]]):
        @functools.wraps(fn)
        def run(*args, **kwargs) -> CriterionResult:
            t0 = time.perf_counter()
            passed, measured, tol = fn(*args, **kwargs)
            dt = time.perf_counter() - t0
            if budget is not None:
                tol = f"{tol}; runtime < {budget:g} s"
                passed = passed and dt < budget
            return CriterionResult(number, name, bool(passed), measured, tol, dt)

        run.number = number
        return run

    return wrap


@functools.lru_cache(maxsize=4)
def _isotropic_rows(cfg: RunConfig) -> tuple[SweepRow, ...]:
    values = sorted(set(ISOTROPIC_ROBUST.tolist()) | {WERNER_THRESHOLD, 1.0})
    return tuple(sweep_isotropic(cfg.replace(lambda1=0.0, p=0.0), values))


@functools.lru_cache(maxsize=8)
def _flip_rows(cfg: RunConfig, axis: str, lambda1: float) -> tuple[SweepRow, ...]:
    values = sorted(set(FLIP_ROBUST) | {FLIP_THRESHOLD})
    return tuple(sweep_flip(cfg.replace(lambda1=lambda1, xi0=0.0), axis, values))


@_timed(1, "Bell decomposition identity", budget=1.0)
def check_bell_decomposition(cfg: RunConfig):
    worst = max(bell_decomposition_residual(SkyrmionSpec(l)) for l in (1, 2, 3))
    return worst < 1e-12, f"max residual {worst:.2e} over l=1,2,3", "< 1e-12"


@_timed(2, "ideal transfer", budget=1.0)
def check_ideal_transfer(cfg: RunConfig):
    target = nonlocal_target(cfg.spec)
    direct = transfer_pipeline(cfg.spec)
    chip = transfer_pipeline(cfg.spec, via_unitary=True)
    dp = max(abs(b.probability - 0.25) for b in direct.values())
    df = max(abs(fidelity_pure(target, b.conditional_state) - 1.0) for b in direct.values())
    du = max(
        float(np.max(np.abs(direct[k].conditional_state.entries - chip[k].conditional_state.entries)))
        for k in BELL_LABELS
    )
    du = max(du, max(abs(direct[k].probability - chip[k].probability) for k in BELL_LABELS))
    ok = dp < 1e-12 and df < 1e-12 and du < 1e-12
    return ok, f"|p-1/4| {dp:.1e}, |F-1| {df:.1e}, unitary vs projection {du:.1e}", "1e-12 each"


@_timed(3, "topological quantization", budget=30.0)
def check_quantization(cfg: RunConfig):
    parts, ok = [], True
    for l in (1, 2, 3):
        field = stokes_nonlocal(nonlocal_target(SkyrmionSpec(l)).density(), cfg.transverse_grid, mode_pair(l, cfg.family))
        n = skyrmion_number(field)
        if n.degenerate:
            ok = False
            parts.append(f"l={l}: degenerate")
            continue
        fd = skyrmion_number_fd(field)
        ok &= abs(n.nsk - l) < 1e-3 and abs(n.nsk - fd) < 0.01
        parts.append(f"l={l}: BL {n.nsk:.6f} FD {fd:.4f}")
    return ok, "; ".join(parts), "|N_sk-l| < 1e-3, |BL-FD| < 0.01"


@_timed(4, "isotropic robustness")
def check_isotropic(cfg: RunConfig):
    rows = _isotropic_rows(cfg)
    robust = [r for r in rows if r.value <= 0.95 + 1e-12]
    end = next(r for r in rows if r.value == 1.0)
    dn = max(abs(r.nsk - cfg.l) if not r.degenerate else math.inf for r in robust)
    df = max(abs(r.fidelity - r.fidelity_analytic) for r in rows)
    dg = max(abs(r.fidelity - fidelity_from_purity_werner(r.purity)) for r in rows)
    ok = dn < 1e-3 and end.degenerate and abs(end.purity - 0.25) < 1e-12 and df < 1e-9 and dg < 1e-9
    measured = (
        f"max |N_sk-{cfg.l}| {dn:.1e} for xi0<=0.95; xi0=1 degenerate={end.degenerate}, "
        f"purity {end.purity:.12f}; |F-analytic| {df:.1e}; |F-F(purity)| {dg:.1e}"
    )
    return ok, measured, "N_sk 1e-3, purity 1e-12, F 1e-9"


def _ellipsoid_error(axis: str, p: float) -> float:
    """Compare the predicted semi-axes with the shrinkage of the six polarization eigenstates."""
    predicted = np.array(poincare_ellipsoid(axis, p))
    measured = []
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        rho = DensityOperator((POL_B,), (np.eye(2) + s) / 2)
        out = pauli_channel(rho, axis, p).entries
        measured.append(abs(np.trace(out @ s).real))
    expected = np.full(3, abs(1 - 2 * p))
    expected["xyz".index(axis)] = 1.0
    return float(max(np.max(np.abs(predicted - measured)), np.max(np.abs(predicted - expected))))


@_timed(5, "flip-channel robustness")
def check_flip(cfg: RunConfig):
    dn = df = de = 0.0
    degenerate_end = True
    for axis in ("y", "z"):
        for lam in (0.0, 0.1):
            rows = _flip_rows(cfg, axis, lam)
            for r in rows:
                df = max(df, abs(r.fidelity - r.fidelity_analytic))
                if r.value < FLIP_THRESHOLD:
                    dn = max(dn, math.inf if r.degenerate else abs(r.nsk - cfg.l))
                else:
                    degenerate_end &= r.degenerate
        for p in (0.0, 0.1, 0.25, 0.4, 0.5):
            de = max(de, _ellipsoid_error(axis, p))
    ok = dn < 1e-3 and df < 1e-9 and degenerate_end and de < 1e-12
    measured = f"max |N_sk-{cfg.l}| {dn:.1e} for p<=0.49; p=0.5 degenerate={degenerate_end}; |F-analytic| {df:.1e}; ellipsoid {de:.1e}"
    return ok, measured, "N_sk 1e-3, F 1e-9, ellipsoid 1e-12"


@_timed(6, "correlation threshold ordering")
def check_threshold_ordering(cfg: RunConfig):
    rows = _isotropic_rows(cfg)
    dc = max(abs(r.concurrence - max(0.0, 1 - 1.5 * r.value)) for r in rows)
    dead = [r for r in rows if r.value >= WERNER_THRESHOLD - 1e-12]
    conc_dead = all(r.concurrence <= 1e-9 for r in dead)
    window = [r for r in rows if 0.7 - 1e-12 <= r.value <= 0.95 + 1e-12]
    survives = all(not r.degenerate and abs(r.nsk - cfg.l) < 1e-3 and r.discord > 1e-4 for r in window)
    min_discord = min(r.discord for r in window)
    end = next(r for r in rows if r.value == 1.0)
    both_die = end.degenerate and end.discord <= 1e-12
    earlier_alive = all(r.discord > 0 and not r.degenerate for r in rows if r.value < 1.0)

    flip_ok = True
    for axis in ("y", "z"):
        for r in _flip_rows(cfg, axis, 0.0):
            at = r.value == FLIP_THRESHOLD
            vanished = r.concurrence <= 1e-12 and r.discord <= 1e-12 and r.degenerate
            alive = r.concurrence > 0 and r.discord > 0 and not r.degenerate
            flip_ok &= vanished if at else alive
    ok = dc < 1e-9 and conc_dead and survives and both_die and earlier_alive and flip_ok
    measured = (
        f"|C-max(0,1-3xi0/2)| {dc:.1e}; C=0 for xi0>=2/3: {conc_dead}; "
        f"N_sk kept and min discord {min_discord:.2e} on [0.7,0.95]; "
        f"discord and N_sk die at xi0=1 only: {both_die and earlier_alive}; flip sweeps vanish together at p=0.5 only: {flip_ok}"
    )
    return ok, measured, "C 1e-9, discord > 1e-4"


def random_bell_diagonal(rng: np.random.Generator) -> DensityOperator:
    lam = rng.dirichlet(np.ones(4))
    # correlation triple from Bell weights (PhiPlus, PhiMinus, PsiPlus, PsiMinus)
    c = np.array([
        lam[0] - lam[1] + lam[2] - lam[3],
        -lam[0] + lam[1] + lam[2] - lam[3],
        lam[0] + lam[1] - lam[2] - lam[3],
    ])
    m = (np.eye(4) + sum(ci * np.kron(s, s) for ci, s in zip(c, (SIGMA_X, SIGMA_Y, SIGMA_Z)))) / 4
    return DensityOperator((OAM_A, POL_B), m)


@_timed(7, "discord oracle equivalence", budget=60.0)
def check_discord_oracle(cfg: RunConfig, n_states: int = 50):
    rng = np.random.default_rng([STAT_SEED, 7])
    worst = 0.0
    for k in range(n_states):
        rho = random_bell_diagonal(rng)
        worst = max(worst, abs(discord_numeric(rho, seed=k) - discord_bell_diagonal(rho)))
    return worst < 1e-4, f"max |numeric-closed| {worst:.2e} over {n_states} states", "< 1e-4"


@_timed(8, "tomography round trip")
def check_tomography(cfg: RunConfig, replicas: int = 50):
    target = nonlocal_target(cfg.spec)
    settings = tomo.settings_two_qubit()
    exact_err = 0.0
    for rho in (target.density(), isotropic_mix(target.density(), 0.4)):
        rec = tomo.simulate_counts(rho, settings, 1e5, exact=True)
        exact_err = max(exact_err, float(np.max(np.abs(tomo.reconstruct(rec).rho.entries - rho.entries))))

    grid, modes = cfg.transverse_grid, cfg.modes
    rec = tomo.simulate_counts(target, settings, 1e5, seed=STAT_SEED)
    rho_hat = tomo.reconstruct(rec).rho
    fid = fidelity_pure(target, rho_hat)
    n = skyrmion_number(stokes_nonlocal(rho_hat, grid, modes))

    def raw_nsk(r):
        return skyrmion_number(stokes_nonlocal(r, grid, modes)).raw

    totals = (1e3, 1e4, 1e5)
    stds = []
    for k, n_tot in enumerate(totals):
        rec_k = tomo.simulate_counts(target, settings, n_tot, seed=STAT_SEED + 100 + k)
        stds.append(tomo.monte_carlo_uncertainty(rec_k, raw_nsk, replicas, seed=STAT_SEED + k)[1])
    slope = float(np.polyfit(np.log10(totals), np.log10(stds), 1)[0])
    ok = exact_err < 1e-8 and fid >= 0.99 and not n.degenerate and abs(n.nsk - cfg.l) < 1e-2 and abs(slope + 0.5) <= 0.1
    measured = (
        f"exact error {exact_err:.1e}; F {fid:.5f}; N_sk {n.nsk:.5f}; "
        f"MC std {', '.join(f'{s:.2e}' for s in stds)} -> exponent {slope:.3f}"
    )
    return ok, measured, "exact 1e-8, F >= 0.99, N_sk 1e-2, exponent -0.5 +/- 0.1"


@_timed(9, "background-noise robustness")
def check_background(cfg: RunConfig, seeds: int = 50):
    target = nonlocal_target(cfg.spec)
    settings = tomo.settings_two_qubit()
    grid, modes = cfg.transverse_grid, cfg.modes
    pur = np.zeros((len(BACKGROUNDS), seeds))
    fid = np.zeros_like(pur)
    worst_nsk = 0.0
    for i, b in enumerate(BACKGROUNDS):
        for s in range(seeds):
            # the same seed at every background level pairs the samples
            rec = tomo.simulate_counts(target, settings, cfg.n_tot, background_rate=b, seed=STAT_SEED + s)
            rho = tomo.reconstruct(rec).rho
            pur[i, s] = purity(rho)
            fid[i, s] = fidelity_pure(target, rho)
            n = skyrmion_number(stokes_nonlocal(rho, grid, modes))
            worst_nsk = max(worst_nsk, math.inf if n.degenerate else abs(n.nsk - cfg.l))
    z_min = math.inf
    for values in (pur, fid):
        diff = values[1:] - values[:-1]
        se = diff.std(axis=1, ddof=1) / math.sqrt(seeds)
        z = -diff.mean(axis=1) / np.where(se > 0, se, math.inf)
        z_min = min(z_min, float(z.min()))
    ok = z_min > 3 and worst_nsk < 1e-2
    measured = (
        f"purity {pur[0].mean():.4f}->{pur[-1].mean():.4f}, F {fid[0].mean():.4f}->{fid[-1].mean():.4f} "
        f"over b={BACKGROUNDS[0]}..{BACKGROUNDS[-1]}; min decrease {z_min:.1f} sigma; max |N_sk-{cfg.l}| {worst_nsk:.1e}"
    )
    return ok, measured, "decrease > 3 sigma per step, N_sk 1e-2"


def _run_commands(cfg: RunConfig, out: Path) -> None:
    from .cli import cmd_sweep_flip, cmd_sweep_isotropic, cmd_texture, cmd_tomo, cmd_transfer

    run = cfg.replace(out=str(out))
    with contextlib.redirect_stdout(io.StringIO()):
        cmd_transfer(run.replace(tomography=True))
        cmd_sweep_isotropic(run)
        cmd_sweep_flip(run, "y")
        cmd_sweep_flip(run, "z")
        cmd_texture(run)
        cmd_tomo(run)


@_timed(10, "determinism")
def check_determinism(cfg: RunConfig):
    # a reduced grid and replica count keep the double run short; the contract does not depend on size
    small = cfg.replace(grid=min(cfg.grid, 96), mc_replicas=10, points=min(cfg.points, 11), workers=2, plots=False)
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp, "a"), Path(tmp, "b")
        _run_commands(small, first)
        _run_commands(small, second)
        names = sorted(p.name for p in first.glob("*.csv"))
        differing = [n for n in names if (first / n).read_bytes() != (second / n).read_bytes()]
        missing = sorted(set(names) ^ {p.name for p in second.glob("*.csv")})
    ok = bool(names) and not differing and not missing
    detail = f"{len(names)} CSV files compared; differing: {differing or 'none'}"
    return ok, detail, "byte-identical"


CRITERIA = (
    check_bell_decomposition,
    check_ideal_transfer,
    check_quantization,
    check_isotropic,
    check_flip,
    check_threshold_ordering,
    check_discord_oracle,
    check_tomography,
    check_background,
    check_determinism,
)


def run_acceptance(cfg: RunConfig, only: Iterable[int] | None = None) -> list[CriterionResult]:
    wanted = set(only) if only else None
    return [check(cfg) for check in CRITERIA if wanted is None or check.number in wanted]


def print_report(results: Iterable[CriterionResult]) -> None:
    results = list(results)
    print("criterion,name,status,measured,tolerance,runtime_s")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f'{r.number},{r.name},{status},"{r.measured}","{r.tolerance}",{r.runtime:.3f}')
    failed = sum(not r.passed for r in results)
    print(f"# {len(results) - failed}/{len(results)} criteria passed")
