"""Command-line entry point: transfer, sweeps, texture, tomography and the acceptance report."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import tomography as tomo
from .config import ConfigError, RunConfig, load_config
from .correlations import concurrence, fidelity_pure, purity
from .states import nonlocal_target
from .sweeps import sweep_flip, sweep_isotropic, write_sweep_csv
from .texture import boundary_winding, skyrmion_number, skyrmion_number_fd, stokes_nonlocal
from .transfer import transfer_pipeline, transferred_state

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ACCEPTANCE = 2


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(x)
    if isinstance(x, str):
        return x
    return f"{x:.12g}"


def _write_rows(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _child_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _nsk_functional(cfg: RunConfig, attr: str = "nsk"):
    grid, modes = cfg.transverse_grid, cfg.modes

    def f(rho):
        n = skyrmion_number(stokes_nonlocal(rho, grid, modes))
        return math.nan if n.degenerate else getattr(n, attr)

    return f


def tomography_summary(cfg: RunConfig, rho, seed: int) -> dict[str, float]:
    """Simulated tomography of ``rho`` with Monte-Carlo error bars on fidelity and N_sk."""
    target = nonlocal_target(cfg.spec)
    records = tomo.simulate_counts(rho, tomo.settings_two_qubit(), cfg.n_tot, cfg.background, seed=seed)
    result = tomo.reconstruct(records)
    replicas = tomo.monte_carlo_reconstructions(records, cfg.mc_replicas, seed=seed)
    f_std = float(np.std([fidelity_pure(target, r) for r in replicas], ddof=1))
    raw_std = float(np.std([_nsk_functional(cfg, "raw")(r) for r in replicas], ddof=1))
    n = skyrmion_number(stokes_nonlocal(result.rho, cfg.transverse_grid, cfg.modes))
    return {
        "records": records,
        "rho": result.rho,
        "F_tomo": fidelity_pure(target, result.rho),
        "F_tomo_std": f_std,
        "purity_tomo": purity(result.rho),
        "concurrence_tomo": concurrence(result.rho),
        "nsk_tomo": math.nan if n.degenerate else n.nsk,
        "nsk_raw_tomo": math.nan if n.degenerate else n.raw,
        "nsk_raw_tomo_std": raw_std,
        "degenerate_tomo": n.degenerate,
    }


def cmd_transfer(cfg: RunConfig) -> list[dict]:
    """Per-outcome probability, fidelity and skyrmion number after correction."""
    target = nonlocal_target(cfg.spec)
    branches = transfer_pipeline(cfg.spec, cfg.noise)
    out = _outdir(cfg)
    rows = []
    for k, (label, b) in enumerate(branches.items()):
        row = {"outcome": label, "probability": b.probability}
        if b.degenerate:
            row.update(fidelity=math.nan, nsk=math.nan, nsk_raw=math.nan, degenerate=True)
        else:
            n = skyrmion_number(stokes_nonlocal(b.conditional_state, cfg.transverse_grid, cfg.modes))
            row.update(
                fidelity=fidelity_pure(target, b.conditional_state),
                nsk=math.nan if n.degenerate else n.nsk,
                nsk_raw=math.nan if n.degenerate else n.raw,
                degenerate=n.degenerate,
            )
            if cfg.tomography:
                summary = tomography_summary(cfg, b.conditional_state, _child_seed(cfg.seed, k))
                row.update({key: v for key, v in summary.items() if key not in ("records", "rho")})
        rows.append(row)

    header = list(rows[0].keys())
    for r in rows[1:]:
        header += [key for key in r if key not in header]
    _write_rows(out / "transfer.csv", header, ([r.get(key, math.nan) for key in header] for r in rows))

    print(f"{'outcome':<9} {'prob':>7} {'F':>7} {'N_sk':>7}" + ("   F_tomo        N_sk_raw_tomo" if cfg.tomography else ""))
    for r in rows:
        line = f"{r['outcome']:<9} {r['probability']:7.4f} {r['fidelity']:7.4f} {r['nsk']:7.3f}"
        if cfg.tomography and "F_tomo" in r:
            line += f"   {r['F_tomo']:.4f}±{r['F_tomo_std']:.4f}  {r['nsk_raw_tomo']:.5f}±{r['nsk_raw_tomo_std']:.5f}"
        print(line)
    return rows


def _finish_sweep(cfg: RunConfig, rows, name: str, title: str) -> Path:
    out = _outdir(cfg)
    path = write_sweep_csv(rows, out / f"{name}.csv")
    if cfg.plots:
        from .plotting import plot_sweep

        plot_sweep(rows, out / f"{name}.png", title)
    print(f"wrote {path} ({len(rows)} rows)")
    return path


def cmd_sweep_isotropic(cfg: RunConfig, xi0_list=None):
    rows = sweep_isotropic(cfg, xi0_list)
    _finish_sweep(cfg, rows, "sweep_isotropic", f"isotropic noise, l={cfg.l}")
    return rows


def cmd_sweep_flip(cfg: RunConfig, axis: str, p_list=None):
    rows = sweep_flip(cfg, axis, p_list)
    _finish_sweep(cfg, rows, f"sweep_flip_{axis}", f"{axis}-flip noise, lambda1={cfg.lambda1}, l={cfg.l}")
    return rows


def cmd_texture(cfg: RunConfig) -> dict:
    """Stokes field of the transferred state plus its topological summary."""
    rho = transferred_state(cfg.spec, cfg.noise)
    field = stokes_nonlocal(rho, cfg.transverse_grid, cfg.modes)
    n = skyrmion_number(field)
    if n.degenerate:
        fd = winding = math.nan
    else:
        fd = skyrmion_number_fd(field)
        winding = boundary_winding(field)
    summary = {
        "nsk": math.nan if n.degenerate else n.nsk,
        "degenerate": n.degenerate,
        "nsk_open_disk": math.nan if n.degenerate else n.raw,
        "truncation": math.nan if n.degenerate else n.truncation,
        "nsk_finite_difference": fd,
        "boundary_winding": winding,
        "winding_over_2pi": winding / (2 * math.pi),
        "integration_radius": field.radius,
    }
    out = _outdir(cfg)
    field.to_csv(out / "texture.csv")
    _write_rows(out / "texture_summary.csv", ("quantity", "value"), summary.items())
    if cfg.plots:
        from .plotting import plot_texture

        plot_texture(field, out / "texture.png", f"l={cfg.l}, N_sk={summary['nsk']:.4f}")
    for key, value in summary.items():
        print(f"{key:<22} {_fmt(value)}")
    return summary


def cmd_tomo(cfg: RunConfig) -> dict:
    """Simulated tomography of the outcome-averaged transferred state."""
    rho = transferred_state(cfg.spec, cfg.noise)
    summary = tomography_summary(cfg, rho, cfg.seed)
    out = _outdir(cfg)
    tomo.write_counts_csv(summary.pop("records"), out / "counts.csv")
    rho_hat = summary.pop("rho")
    tomo.write_density_csv(rho_hat, out / "rho.csv")
    _write_rows(out / "tomo_summary.csv", ("quantity", "value"), summary.items())
    if cfg.plots:
        from .plotting import plot_density

        plot_density(rho_hat, out / "rho.png", f"reconstructed state, F={summary['F_tomo']:.4f}")
    for key, value in summary.items():
        print(f"{key:<20} {_fmt(value)}")
    return summary


def _common_flags(parser: argparse.ArgumentParser, default) -> None:
    g = parser.add_argument_group("run configuration")
    g.add_argument("--config", default=default, help="flat key = value config file")
    g.add_argument("--seed", type=int, default=default)
    g.add_argument("--out", default=default, help="output directory")
    g.add_argument("--grid", type=int, default=default, help="pixels per side")
    g.add_argument("--extent", type=float, default=default, help="half-width of the grid in beam waists")
    g.add_argument("--l", type=int, default=default, help="OAM charge of the skyrmion")
    g.add_argument("--family", choices=("laguerre_gauss", "bessel"), default=default)
    g.add_argument("--xi0", type=float, default=default)
    g.add_argument("--p", type=float, default=default)
    g.add_argument("--lambda1", type=float, default=default)
    g.add_argument("--background", type=float, default=default)
    g.add_argument("--n-tot", dest="n_tot", type=float, default=default)
    g.add_argument("--mc-replicas", dest="mc_replicas", type=int, default=default)
    g.add_argument("--workers", type=int, default=default)
    g.add_argument("--points", type=int, default=default)
    g.add_argument("--no-plots", dest="plots", action="store_false", default=default)
    g.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyrmion-transfer", description=__doc__)
    _common_flags(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    # subcommand copies of the flags default to SUPPRESS so they never mask values given before the subcommand
    p = sub.add_parser("transfer", help="run the four BSM branches")
    p.add_argument("--tomography", action="store_true", default=argparse.SUPPRESS)
    sub.add_parser("sweep-isotropic", help="Werner-noise sweep")
    p = sub.add_parser("sweep-flip", help="Pauli flip sweep on photon B")
    p.add_argument("--axis", choices=("y", "z"), required=True)
    sub.add_parser("texture", help="Stokes field and skyrmion number")
    sub.add_parser("tomo", help="simulated tomography with Monte-Carlo errors")
    p = sub.add_parser("acceptance", help="run the acceptance criteria")
    p.add_argument("--only", type=int, nargs="+", default=None, help="criterion numbers to run")
    for p in sub.choices.values():
        _common_flags(p, argparse.SUPPRESS)
    return parser


_CONFIG_KEYS = (
    "seed", "out", "grid", "extent", "l", "family", "xi0", "p", "lambda1", "background",
    "n_tot", "mc_replicas", "workers", "points", "plots", "tomography", "axis",
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    if args.command == "sweep-flip":
        overrides["axis"] = None
    return load_config(getattr(args, "config", None), **overrides)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", None) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "transfer":
            cmd_transfer(cfg)
        elif args.command == "sweep-isotropic":
            cmd_sweep_isotropic(cfg)
        elif args.command == "sweep-flip":
            cmd_sweep_flip(cfg, args.axis)
        elif args.command == "texture":
            cmd_texture(cfg)
        elif args.command == "tomo":
            cmd_tomo(cfg)
        elif args.command == "acceptance":
            from .acceptance import print_report, run_acceptance

            results = run_acceptance(cfg, only=args.only)
            print_report(results)
            return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
