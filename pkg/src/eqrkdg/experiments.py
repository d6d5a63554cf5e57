"""Accuracy sweeps and pattern simulations driven by a :class:`RunConfig`."""

from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .dg import DGSpace, error_norms
from .diagnostics import EnergyRecord, EocTable, eoc_table, write_energy_csv
from .mesh import build_mesh
from .potential import MANUFACTURED, ManufacturedSolution, potential_by_name
from .rk import builtin
from .snapshots import write_grid_csv, write_vtk
from .stepper import LEQRKStepper, StepState

log = logging.getLogger(__name__)


def build_problem(cfg: RunConfig, allow_unstable: bool = False):
    """Create ``(stepper, initial_state, exact)`` from a configuration.

    ``exact`` is the manufactured solution when the initial condition names
    one, else None.
    """
    mesh = build_mesh(cfg.bounds, cfg.cells, cfg.bc)
    space = DGSpace(mesh, cfg.degree)
    pot = potential_by_name(cfg.potential, cfg.epsilon, cfg.g, cfg.C0)
    if cfg.a != pot.a:
        pot = dataclasses.replace(pot, a=cfg.a)

    exact = None
    if cfg.initial in MANUFACTURED:
        exact = ManufacturedSolution(MANUFACTURED[cfg.initial][0], pot, mesh.dim, cfg.initial)
    source = None
    if cfg.source != "none":
        if cfg.source not in MANUFACTURED:
            raise ValueError(f"unknown source {cfg.source!r}")
        src = ManufacturedSolution(MANUFACTURED[cfg.source][0], pot, mesh.dim, cfg.source)
        source = src.source

    stepper = LEQRKStepper(space, pot, builtin(cfg.tableau), cfg.tau, source=source,
                           solver=cfg.solver, allow_unstable=allow_unstable)
    if exact is not None:
        state = stepper.initial_state(exact.initial)
    elif cfg.initial == "random":
        state = stepper.initial_state(random_initial(space, cfg.seed, cfg.amplitude))
    elif cfg.initial == "zero":
        state = stepper.initial_state(space.zeros())
    else:
        raise ValueError(f"unknown initial condition {cfg.initial!r}")
    return stepper, state, exact


def random_initial(space: DGSpace, seed: int, amplitude: float):
    """Cell means drawn uniformly from ``[-amplitude, amplitude]``; higher modes zero."""
    rng = np.random.default_rng(seed)
    c = np.zeros((space.mesh.n_cells, space.n_basis))
    c[:, 0] = rng.uniform(-amplitude, amplitude, space.mesh.n_cells) * np.sqrt(space.mesh.cell_volume)
    return space.field(c)


def run_to_end(cfg: RunConfig, callback=None) -> tuple[StepState, list[EnergyRecord], object]:
    stepper, state, exact = build_problem(cfg)
    state, records = stepper.run(state, cfg.n_steps, cfg.L, cfg.tol, callback)
    return state, records, exact


def accuracy_space(cfg: RunConfig, cells=(8, 16, 32, 64)) -> EocTable:
    """Errors at the final time for a sequence of N x N meshes."""
    l2, linf = [], []
    for n in cells:
        c = cfg.with_updates(cells=[n] * len(cfg.bounds))
        state, _, exact = run_to_end(c)
        e = error_norms(state.u, lambda x: exact.exact(x, state.t))
        log.info("N=%d: L2 %.5e Linf %.5e", n, *e)
        l2.append(e[0])
        linf.append(e[1])
    return eoc_table("N", list(cells), {"L2": l2, "Linf": linf})


def accuracy_time(cfg: RunConfig, taus=(2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5)) -> EocTable:
    """Errors at the final time ``cfg.T`` for a sequence of step sizes."""
    l2, linf = [], []
    for tau in taus:
        c = cfg.with_updates(tau=float(tau), steps=None)
        state, _, exact = run_to_end(c)
        e = error_norms(state.u, lambda x: exact.exact(x, state.t))
        log.info("tau=%g: L2 %.5e Linf %.5e", tau, *e)
        l2.append(e[0])
        linf.append(e[1])
    return eoc_table("tau", [float(t) for t in taus], {"L2": l2, "Linf": linf})


@dataclass
class SnapshotWriter:
    """Callback writing field snapshots at given times and/or every k steps."""

    outdir: str
    cfg: RunConfig

    def __post_init__(self):
        self.pending = sorted(self.cfg.snapshot_times)
        self.written: list[str] = []

    def due(self, state: StepState) -> bool:
        tau = self.cfg.tau
        hit = False
        while self.pending and self.pending[0] <= state.t + 0.5 * tau:
            if abs(self.pending[0] - state.t) <= 0.5 * tau:
                hit = True
            self.pending.pop(0)
        k = self.cfg.snapshot_interval
        return hit or (k > 0 and state.n % k == 0)

    def __call__(self, state: StepState, rec: EnergyRecord) -> None:
        fmt = self.cfg.snapshot_format
        if fmt == "none" or not self.due(state):
            return
        stem = os.path.join(self.outdir, f"u_{state.n:06d}")
        if fmt in ("vtk", "both"):
            write_vtk(stem + ".vtk", state.u, self.cfg.samples_per_cell, time=state.t)
            self.written.append(stem + ".vtk")
        if fmt in ("csv", "both"):
            write_grid_csv(stem + ".csv", state.u, self.cfg.samples_per_cell)
            self.written.append(stem + ".csv")


def simulate(cfg: RunConfig, outdir: str = ".", progress=None):
    """Run a pattern simulation writing the energy CSV and snapshots into ``outdir``."""
    os.makedirs(outdir, exist_ok=True)
    writer = SnapshotWriter(outdir, cfg)

    def cb(state, rec):
        writer(state, rec)
        if progress is not None:
            progress(state, rec)

    state, records, _ = run_to_end(cfg, cb)
    if cfg.energy_csv:
        write_energy_csv(os.path.join(outdir, cfg.energy_csv), records)
    return state, records, writer.written
