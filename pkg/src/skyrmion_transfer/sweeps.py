"""Noise sweeps of the transferred state: fidelity, correlations and skyrmion number per knob value."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .channels import NoiseParams
from .config import RunConfig
from .correlations import correlation_report, fidelity_flip
from .states import nonlocal_target
from .texture import skyrmion_number, stokes_nonlocal
from .transfer import transferred_state

SWEEP_HEADER = ("knob", "value", "F_sim", "F_analytic", "purity", "concurrence", "discord", "nsk", "degenerate")
WERNER_THRESHOLD = 2.0 / 3.0
FLIP_THRESHOLD = 0.5
# last flip point below the threshold that the robustness checks require
FLIP_NEAR_THRESHOLD = 0.49


@dataclass(frozen=True)
class SweepRow:
    knob: str
    value: float
    fidelity: float
    fidelity_analytic: float
    purity: float
    concurrence: float
    discord: float
    nsk: float
    degenerate: bool

    def csv_fields(self) -> list[str]:
        nsk = "nan" if self.degenerate else _fmt(self.nsk)
        return [
            self.knob,
            _fmt(self.value),
            _fmt(self.fidelity),
            _fmt(self.fidelity_analytic),
            _fmt(self.purity),
            _fmt(self.concurrence),
            _fmt(self.discord),
            nsk,
            str(int(self.degenerate)),
        ]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def knob_values(stop: float, points: int, thresholds: Sequence[float]) -> list[float]:
    """Evenly spaced points on [0, stop] with the threshold points merged in."""
    vals = set(np.round(np.linspace(0.0, stop, points), 12).tolist())
    vals.update(t for t in thresholds if 0 <= t <= stop)
    return sorted(vals)


def isotropic_values(points: int = 21) -> list[float]:
    return knob_values(1.0, points, [WERNER_THRESHOLD])


def flip_values(points: int = 21) -> list[float]:
    return knob_values(FLIP_THRESHOLD, points, [FLIP_NEAR_THRESHOLD, FLIP_THRESHOLD])


def werner_fidelity(xi0: float) -> float:
    return math.sqrt(1.0 - 0.75 * xi0)


def evaluate_point(cfg: RunConfig, noise: NoiseParams, knob: str, value: float, analytic: float, seed: int) -> SweepRow:
    rho = transferred_state(cfg.spec, noise)
    n = skyrmion_number(stokes_nonlocal(rho, cfg.transverse_grid, cfg.modes))
    rep = correlation_report(nonlocal_target(cfg.spec), rho, n.nsk, n.degenerate, seed=seed)
    return SweepRow(knob, value, rep.fidelity, analytic, rep.purity, rep.concurrence, rep.discord, rep.nsk, rep.degenerate)


def _point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def _run(jobs: list[tuple], workers: int) -> list[SweepRow]:
    if workers <= 1 or len(jobs) <= 1:
        return [evaluate_point(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order whatever the completion order
        return list(pool.map(evaluate_point, *zip(*jobs)))


def sweep_isotropic(cfg: RunConfig, xi0_list: Sequence[float] | None = None) -> list[SweepRow]:
    """Werner noise on the link; local imperfection and flip settings come from ``cfg``."""
    values = isotropic_values(cfg.points) if xi0_list is None else list(xi0_list)
    base = cfg.noise
    jobs = []
    for i, xi in enumerate(values):
        noise = NoiseParams(xi, base.p, base.axis, base.lambda1, base.background)
        analytic = werner_fidelity(xi) if noise.lambda1 == 0 and noise.p == 0 else math.nan
        jobs.append((cfg, noise, "xi0", float(xi), analytic, _point_seed(cfg.seed, i)))
    return _run(jobs, cfg.workers)


def sweep_flip(cfg: RunConfig, axis: str, p_list: Sequence[float] | None = None) -> list[SweepRow]:
    """Pauli flip of photon B's polarization along ``axis`` with ``cfg.lambda1`` local imperfection."""
    if axis not in ("y", "z"):
        raise ValueError(f"flip sweeps run along y or z, got {axis!r}")
    values = flip_values(cfg.points) if p_list is None else list(p_list)
    base = cfg.noise
    jobs = []
    for i, p in enumerate(values):
        noise = NoiseParams(base.xi0, p, axis, base.lambda1, base.background)
        analytic = fidelity_flip(base.lambda1, p) if base.xi0 == 0 else math.nan
        jobs.append((cfg, noise, "p", float(p), analytic, _point_seed(cfg.seed, i)))
    return _run(jobs, cfg.workers)


def write_sweep_csv(rows: Sequence[SweepRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for row in rows:
            fh.write(",".join(row.csv_fields()) + "\n")
    return path
