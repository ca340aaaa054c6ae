"""Figures written next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .sweeps import SweepRow  # noqa: E402
from .tensor import DensityOperator  # noqa: E402
from .texture import StokesField  # noqa: E402

# fixed metadata keeps repeated renders byte-identical
_PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_sweep(rows: Sequence[SweepRow], path, title: str = "") -> Path:
    x = np.array([r.value for r in rows])
    fig, (ax, ax_n) = plt.subplots(2, 1, figsize=(6, 6), sharex=True, gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(x, [r.fidelity for r in rows], "o", label="F (simulated)")
    ax.plot(x, [r.fidelity_analytic for r in rows], "-", label="F (analytic)")
    ax.plot(x, [r.purity for r in rows], "s", ms=4, label="purity")
    ax.plot(x, [r.concurrence for r in rows], "^", ms=4, label="concurrence")
    ax.plot(x, [r.discord for r in rows], "v", ms=4, label="discord")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    ax.set_title(title)
    nsk = np.array([np.nan if r.degenerate else r.nsk for r in rows])
    ax_n.plot(x, nsk, "o", color="tab:red")
    degenerate = [r.value for r in rows if r.degenerate]
    ax_n.plot(degenerate, np.zeros(len(degenerate)), "x", color="k", label="degenerate")
    ax_n.set_ylabel("N_sk")
    ax_n.set_xlabel(rows[0].knob if rows else "")
    if degenerate:
        ax_n.legend(fontsize=8)
    return _save(fig, path)


def plot_texture(field: StokesField, path, title: str = "") -> Path:
    s = field.normalized()
    ext = field.grid.extent
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.6))
    for ax, comp, name in zip(axes, s, ("S_x", "S_y", "S_z")):
        im = ax.imshow(comp, origin="lower", extent=(-ext, ext, -ext, ext), cmap="RdBu_r", vmin=-1, vmax=1)
        ax.add_patch(plt.Circle((0, 0), field.radius, fill=False, ls="--", color="k", lw=0.8))
        ax.set_title(name)
        ax.set_xlabel("x / w0")
    axes[0].set_ylabel("y / w0")
    fig.colorbar(im, ax=axes, shrink=0.8)
    fig.suptitle(title)
    return _save(fig, path)


def plot_density(rho: DensityOperator, path, title: str = "") -> Path:
    m = rho.entries
    d = m.shape[0]
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.6))
    for ax, part, name in zip(axes, (m.real, m.imag), ("Re", "Im")):
        im = ax.imshow(part, cmap="RdBu_r", vmin=-0.5, vmax=0.5)
        ax.set_xticks(range(d))
        ax.set_yticks(range(d))
        ax.set_title(name)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.suptitle(title)
    return _save(fig, path)
