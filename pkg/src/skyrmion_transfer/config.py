"""Run configuration: a flat ``key = value`` file with ``#`` comments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .channels import AXES, NoiseParams
from .states import SkyrmionSpec
from .texture import FAMILIES, TransverseGrid, mode_pair


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    l: int = 2
    grid: int = 512
    extent: float = 6.0
    family: str = "laguerre_gauss"
    xi0: float = 0.0
    p: float = 0.0
    axis: str = "z"
    lambda1: float = 0.0
    background: float = 0.0
    n_tot: float = 1e5
    mc_replicas: int = 50
    seed: int = 0
    out: str = "out"
    workers: int = 1
    points: int = 21
    tomography: bool = False
    plots: bool = True

    def __post_init__(self):
        try:
            self.spec
            self.noise
            self.transverse_grid
            mode_pair(self.l, self.family)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.n_tot <= 0:
            raise ConfigError("n_tot must be positive")
        if self.mc_replicas < 10:
            raise ConfigError("mc_replicas must be at least 10")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.points < 2:
            raise ConfigError("points must be at least 2")

    @property
    def spec(self) -> SkyrmionSpec:
        return SkyrmionSpec(self.l)

    @property
    def noise(self) -> NoiseParams:
        return NoiseParams(self.xi0, self.p, self.axis, self.lambda1, self.background)

    @property
    def transverse_grid(self) -> TransverseGrid:
        return TransverseGrid(self.grid, self.extent)

    @property
    def modes(self):
        return mode_pair(self.l, self.family)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str):
    kind = _FIELDS[key].type
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, source: str = "<config>") -> dict[str, Any]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            known = ", ".join(sorted(_FIELDS))
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} (known keys: {known})")
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the file, then non-None overrides."""
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        values.update(parse_config(text, str(path)))
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = value
    return RunConfig(**values)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{name} = {getattr(cfg, name)}\n" for name in _FIELDS)
