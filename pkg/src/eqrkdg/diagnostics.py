"""Discrete energy, convergence tables and the energy CSV stream."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dg import DGField

ENERGY_COLUMNS = ("n", "t", "E", "E_shifted", "dissipation", "bound", "pc_iterations")


@dataclass
class EnergyRecord:
    n: int
    t: float
    energy: float
    shifted: float
    dissipation: float = float("nan")  # E^{n-1} - E^n
    bound: float = float("nan")        # tau * sum_i b_i ||xi_i||^2
    pc_iterations: int = 0

    def row(self) -> list[str]:
        def g(x):
            return "" if isinstance(x, float) and math.isnan(x) else repr(float(x))
        return [str(self.n), g(self.t), g(self.energy), g(self.shifted), g(self.dissipation),
                g(self.bound), str(self.pc_iterations)]


def discrete_energy(q_h: DGField, U_h: DGField, C0: float = 0.0, volume: float = 0.0,
                    n: int = 0, t: float = 0.0, **extra) -> EnergyRecord:
    """``E = 1/2 ||q_h||^2 + ||U_h||^2`` together with ``E - C0 |Omega|``."""
    if q_h.coeffs.shape != U_h.coeffs.shape:
        raise ValueError("q_h and U_h live on different spaces")
    E = 0.5 * float(np.sum(q_h.coeffs ** 2)) + float(np.sum(U_h.coeffs ** 2))
    return EnergyRecord(n, t, E, E - C0 * volume, **extra)


def write_energy_csv(path, records: Iterable[EnergyRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ENERGY_COLUMNS)
        for r in records:
            w.writerow(r.row())


def read_energy_csv(path) -> list[EnergyRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            def f(key):
                return float(row[key]) if row[key] else float("nan")
            out.append(EnergyRecord(int(row["n"]), f("t"), f("E"), f("E_shifted"),
                                    f("dissipation"), f("bound"), int(row["pc_iterations"])))
    return out


@dataclass
class EocTable:
    """Errors against a resolution axis and the observed orders between rows."""

    axis_name: str
    resolutions: list
    errors: dict[str, list[float]]
    orders: dict[str, list[float]] = field(default_factory=dict)

    def format(self) -> str:
        names = list(self.errors)
        head = f"{self.axis_name:>10}" + "".join(f"{n + ' error':>16}{'order':>8}" for n in names)
        lines = [head]
        for i, res in enumerate(self.resolutions):
            line = f"{res!s:>10}"
            for n in names:
                o = self.orders[n][i]
                line += f"{self.errors[n][i]:16.5e}" + (f"{o:8.2f}" if not math.isnan(o) else f"{'':>8}")
            lines.append(line)
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        names = list(self.errors)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([self.axis_name] + [c for n in names for c in (f"{n}_error", f"{n}_order")])
            for i, res in enumerate(self.resolutions):
                row = [res]
                for n in names:
                    o = self.orders[n][i]
                    row += [repr(self.errors[n][i]), "" if math.isnan(o) else f"{o:.6f}"]
                w.writerow(row)


def eoc(errors: Sequence[float]) -> list[float]:
    """``log2(e_i / e_{i+1})`` for successive halvings; first entry is NaN.

    Rows with a zero or non-finite error give NaN.
    """
    out = [float("nan")]
    for e0, e1 in zip(errors[:-1], errors[1:]):
        if e0 > 0 and e1 > 0 and np.isfinite(e0) and np.isfinite(e1):
            out.append(math.log2(e0 / e1))
        else:
            out.append(float("nan"))
    return out


def eoc_table(axis_name: str, resolutions: Sequence, errors: dict[str, Sequence[float]]) -> EocTable:
    if len(resolutions) < 1:
        raise ValueError("need at least one row")
    errs = {k: [float(x) for x in v] for k, v in errors.items()}
    return EocTable(axis_name, list(resolutions), errs, {k: eoc(v) for k, v in errs.items()})
