"""Run configuration: a flat ``key = value`` text format with sections."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace

SECTIONS = {
    "mesh": ("bounds", "cells", "bc"),
    "discretization": ("degree",),
    "potential": ("potential", "epsilon", "g", "a", "C0"),
    "time": ("tableau", "tau", "T", "steps", "solver"),
    "pc": ("L", "tol"),
    "initial": ("initial", "seed", "amplitude"),
    "source": ("source",),
    "output": ("energy_csv", "snapshot_interval", "snapshot_times", "snapshot_format",
               "samples_per_cell"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    bounds: list = field(default_factory=lambda: [(0.0, 100.0), (0.0, 100.0)])
    cells: list = field(default_factory=lambda: [64, 64])
    bc: str = "periodic"
    degree: int = 2
    potential: str = "swift-hohenberg"
    epsilon: float = 0.3
    g: float = 0.0
    a: float = 1.0
    C0: float = 1e3
    tableau: str = "gl4"
    tau: float = 0.1
    T: float | None = 198.0
    steps: int | None = None
    solver: str = "auto"
    L: int = 2
    tol: float = 1e-10
    initial: str = "random"      # random | zero | a manufactured solution name
    seed: int = 0
    amplitude: float = 0.1
    source: str = "none"         # none | a manufactured solution name
    energy_csv: str = "energy.csv"
    snapshot_interval: int = 0
    snapshot_times: list = field(default_factory=lambda: [1.2, 12.0, 27.0, 60.0, 120.0, 198.0])
    snapshot_format: str = "vtk"  # vtk | csv | both | none
    samples_per_cell: int = 4

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not 0 <= self.degree <= 4:
            raise ConfigError(f"degree must be in 0..4, got {self.degree}")
        if self.steps is None:
            if self.T is None:
                raise ConfigError("give either T or steps")
            n = self.T / self.tau
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError(f"T = {self.T} is not an integer multiple of tau = {self.tau}")
        elif self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if len(self.bounds) != len(self.cells):
            raise ConfigError("bounds and cells disagree on the dimension")
        if self.snapshot_format not in ("vtk", "csv", "both", "none"):
            raise ConfigError(f"unknown snapshot format {self.snapshot_format!r}")
        if self.L < 0 or not self.tol > 0:
            raise ConfigError("need L >= 0 and tol > 0")

    @property
    def n_steps(self) -> int:
        return self.steps if self.steps is not None else int(round(self.T / self.tau))

    def with_updates(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    # ------------------------------------------------------------- text format
    def to_text(self) -> str:
        out = []
        for sec, keys in SECTIONS.items():
            out.append(f"[{sec}]")
            for k in keys:
                out.append(f"{k} = {_fmt(getattr(self, k))}")
            out.append("")
        return "\n".join(out)

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        updates = {}
        for sec in cp.sections():
            if sec not in SECTIONS:
                raise ConfigError(f"unknown section [{sec}]")
            for k, v in cp.items(sec):
                if k not in SECTIONS[sec]:
                    raise ConfigError(f"unknown key {k!r} in section [{sec}]")
                updates[k] = v
        return (base or cls()).override(updates)

    def override(self, updates: dict) -> "RunConfig":
        """Return a copy with string-valued ``updates`` parsed per field type."""
        kinds = {f.name: f for f in fields(self)}
        parsed = {}
        for k, v in updates.items():
            if k not in kinds:
                raise ConfigError(f"unknown config key {k!r}")
            try:
                parsed[k] = _parse(k, v)
            except ValueError as exc:
                raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
        return replace(self, **parsed)


_INT = {"degree", "steps", "L", "seed", "snapshot_interval", "samples_per_cell"}
_FLOAT = {"epsilon", "g", "a", "C0", "tau", "T", "tol", "amplitude"}


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        if v and isinstance(v[0], tuple):
            return ", ".join(f"{a!r}:{b!r}" for a, b in v)
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _parse(key: str, v):
    if not isinstance(v, str):
        return v
    v = v.strip()
    if key in ("T", "steps") and v.lower() == "none":
        return None
    if key in _INT:
        return int(v)
    if key in _FLOAT:
        x = float(v)
        if math.isnan(x):
            raise ValueError("NaN not allowed")
        return x
    if key == "bounds":
        out = []
        for part in v.split(","):
            lo, hi = part.split(":")
            out.append((float(lo), float(hi)))
        return out
    if key == "cells":
        return [int(x) for x in v.split(",")]
    if key == "snapshot_times":
        return [float(x) for x in v.split(",") if x.strip()]
    return v


PRESETS = {
    "rolls": RunConfig(),
    "hexagons": RunConfig(epsilon=0.1, g=1.0),
    "accuracy-space": RunConfig(
        bounds=[(-2 * math.pi, 2 * math.pi)] * 2, cells=[32, 32], degree=1, epsilon=0.025,
        tau=1e-3, T=0.01, L=10, initial="sin-half", source="sin-half", snapshot_format="none",
        energy_csv="", snapshot_times=[]),
    "accuracy-time": RunConfig(
        bounds=[(-4 * math.pi, 4 * math.pi)] * 2, cells=[64, 64], degree=3, epsilon=0.025,
        tau=0.25, T=1.5, L=2, initial="sin-quarter", source="sin-quarter",
        snapshot_format="none", energy_csv="", snapshot_times=[]),
}
