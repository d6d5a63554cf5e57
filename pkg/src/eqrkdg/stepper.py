"""Linear energy-quadratized implicit RK time stepping for DG gradient flows.

The auxiliary variable ``U = sqrt(phi(u) + C0)`` lives pointwise at
quadrature nodes.  Each step solves one linear stage system with frozen
weights ``H(u*_i)``, updates ``U`` nodewise and projects it back onto V_h.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagnostics import EnergyRecord, discrete_energy
from .dg import DGField, DGSpace, QuadField
from .operators import StageSolver, assemble_G
from .potential import Potential
from .rk import ButcherTableau, certify_algebraically_stable

log = logging.getLogger(__name__)


@dataclass
class History:
    """Previous step data used to extrapolate stage values."""

    t_prev: float
    u_prev: np.ndarray        # (n_cells, nb)
    Uh_prev: np.ndarray
    stage_u: np.ndarray       # (s, n_cells, nb), corrected stage values
    stage_Uh: np.ndarray      # (s, n_cells, nb), projections of the nodal stage U


@dataclass
class StepState:
    n: int
    t: float
    u: DGField
    q: DGField
    U: QuadField
    Uh: DGField
    history: History | None = field(default=None, repr=False)


@dataclass
class StageResult:
    space: DGSpace = field(repr=False)
    xi: np.ndarray            # (s, n_cells, nb)
    q_tilde: np.ndarray
    u_tilde: np.ndarray
    l: np.ndarray             # (s, n_cells, nq)
    U_tilde: np.ndarray       # (s, n_cells, nq)
    Uh_tilde: np.ndarray      # (s, n_cells, nb)

    def stage(self, i: int) -> dict:
        f, g = self.space.field, self.space.quad_field
        return dict(xi=f(self.xi[i]), q_tilde=f(self.q_tilde[i]), u_tilde=f(self.u_tilde[i]),
                    l=g(self.l[i]), U_tilde=g(self.U_tilde[i]), Uh_tilde=f(self.Uh_tilde[i]))


@dataclass
class StepInfo:
    energy: float
    bound: float               # tau * sum_i b_i ||xi_i||^2
    residual: float
    pc_iterations: int = 0
    pc_change: float = float("nan")


def lagrange_weights(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Lagrange basis values ``w[t, k] = l_k(targets[t])``."""
    nodes = np.asarray(nodes, dtype=float)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    w = np.ones((targets.size, nodes.size))
    for k, xk in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if j != k:
                w[:, k] *= (targets - xj) / (xk - xj)
    return w


def history_nodes(c: np.ndarray, dedup_tol: float = 1e-12) -> tuple[np.ndarray, list]:
    """Interpolation nodes in units of tau relative to ``t_n``.

    Returns the distinct nodes and, for each, its source: ``"now"``,
    ``"prev"`` or a stage index.  Stage nodes coinciding with an earlier node
    are dropped.
    """
    nodes = [0.0, -1.0]
    src: list = ["now", "prev"]
    for i, ci in enumerate(c):
        x = ci - 1.0
        if min(abs(x - y) for y in nodes) <= dedup_tol:
            continue
        nodes.append(x)
        src.append(i)
    nodes = np.array(nodes)
    gaps = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(len(nodes))
    if gaps.min() < 1e-8:
        raise ValueError(f"interpolation nodes nearly coincide: {nodes}")
    return nodes, src


class LEQRKStepper:
    """Fully discrete linear EQ-RK-DG scheme on a fixed space and step size.

    Parameters
    ----------
    space : DGSpace
    potential : Potential
    tableau : ButcherTableau
        Must be algebraically stable unless ``allow_unstable`` is set.
    tau : float
    source : callable ``f(x, t)``, optional
        Added as ``(f(., t_n + c_i tau), phi)`` to every stage.
    solver : {"auto", "direct", "iterative"}
    """

    def __init__(self, space: DGSpace, potential: Potential, tableau: ButcherTableau,
                 tau: float, source: Callable | None = None, solver: str = "auto",
                 allow_unstable: bool = False, G=None, rtol: float = 1e-12):
        if tau < 0:
            raise ValueError("time step must be non-negative")
        cert = certify_algebraically_stable(tableau)
        if not cert.stable and not allow_unstable:
            raise ValueError(f"tableau {tableau.name!r} is not algebraically stable "
                             f"({cert.reason}); pass allow_unstable=True to run it anyway")
        self.space = space
        self.potential = potential
        self.tableau = tableau
        self.tau = float(tau)
        self.source = source
        self.G = assemble_G(space, potential.a) if G is None else G
        self.solver = StageSolver(self.G, tableau, self.tau, solver, rtol)

    # ---------------------------------------------------------------- helpers
    def _ev(self, c):
        return self.space.eval_coeffs(c)

    def _pr(self, v):
        return self.space.project_values(v)

    def _Lh(self, c: np.ndarray) -> np.ndarray:
        return (self.G.matrix @ c.ravel()).reshape(c.shape)

    def energy(self, state: StepState) -> float:
        return discrete_energy(state.q, state.Uh).energy

    def source_terms(self, t: float) -> np.ndarray | None:
        """Projected source at the stage times, shape ``(s, n_dofs)``."""
        if self.source is None:
            return None
        nodes = self.space.nodes
        return np.stack([self._pr(self.source(nodes, t + ci * self.tau)).ravel()
                         for ci in self.tableau.c])

    # ------------------------------------------------------------------ state
    def initial_state(self, u0, t0: float = 0.0) -> StepState:
        """``u_h = Pi u0`` and ``U = sqrt(phi(u0) + C0)`` sampled at quadrature nodes.

        ``u0`` may be a callable of ``x`` or a :class:`DGField` (then ``U``
        uses its nodal values).
        """
        space = self.space
        if isinstance(u0, DGField):
            uh = u0.coeffs.copy()
            u_nodes = self._ev(uh)
        else:
            u_nodes = np.broadcast_to(np.asarray(u0(space.nodes), dtype=float),
                                      space.nodes.shape[:2])
            uh = self._pr(u_nodes)
        U = self.potential.sqrt_shifted(u_nodes)
        return StepState(0, float(t0), space.field(uh), space.field(self._Lh(uh)),
                         space.quad_field(U), space.field(self._pr(U)))

    def extrapolate_history(self, state: StepState) -> tuple[np.ndarray, np.ndarray]:
        """Stage predictions of ``u_h`` and ``U_h`` at ``t_n + c_i tau``.

        Without history (first step) both are the current values.
        """
        s = self.tableau.s
        if state.history is None:
            return (np.broadcast_to(state.u.coeffs, (s,) + state.u.coeffs.shape).copy(),
                    np.broadcast_to(state.Uh.coeffs, (s,) + state.Uh.coeffs.shape).copy())
        h = state.history
        nodes, src = history_nodes(self.tableau.c)
        w = lagrange_weights(nodes, self.tableau.c)  # (s, n_nodes)

        def pick(now, prev, stages):
            vals = [now if k == "now" else prev if k == "prev" else stages[k] for k in src]
            return np.einsum("sk,k...->s...", w, np.stack(vals))

        return (pick(state.u.coeffs, h.u_prev, h.stage_u),
                pick(state.Uh.coeffs, h.Uh_prev, h.stage_Uh))

    # ------------------------------------------------------------------- step
    def leqrk_step(self, state: StepState, u_star: np.ndarray) -> tuple[StepState, StageResult, StepInfo]:
        """One linear step with frozen ``H(u*_i)``; ``u_star`` is ``(s, n_cells, nb)``."""
        space, tab, tau = self.space, self.tableau, self.tau
        s = tab.s
        un = state.u.coeffs
        shape = un.shape
        H = self.potential.H(self._ev(u_star))           # (s, nc, nq)
        Uq = self._ev(state.Uh.coeffs)                    # U_h^n at nodes
        r = -self._pr(H * Uq).reshape(s, -1)
        f = self.source_terms(state.t)
        if f is not None:
            r = r + f
        xi, qt = self.solver.solve(H, r, un.ravel())
        xi = xi.reshape((s,) + shape)
        qt = qt.reshape((s,) + shape)

        u_tilde = un + tau * np.einsum("ij,j...->i...", tab.A, xi)
        l = 0.5 * H * self._ev(xi)
        U_tilde = Uq + tau * np.einsum("ij,j...->i...", tab.A, l)
        Uh_tilde = self._pr(U_tilde)

        u_new = un + tau * np.einsum("i,i...->...", tab.b, xi)
        U_new = Uq + tau * np.einsum("i,i...->...", tab.b, l)
        new = StepState(state.n + 1, state.t + tau, space.field(u_new), space.field(self._Lh(u_new)),
                        space.quad_field(U_new), space.field(self._pr(U_new)),
                        History(state.t, un, state.Uh.coeffs, u_tilde, Uh_tilde))
        stages = StageResult(space, xi, qt, u_tilde, l, U_tilde, Uh_tilde)
        bound = tau * float(np.sum(tab.b * np.sum(xi.reshape(s, -1) ** 2, axis=1)))
        info = StepInfo(self.energy(new), bound, self.solver.last_residual)
        return new, stages, info

    def leqrk_pc_step(self, state: StepState, L: int = 2, tol: float = 1e-10):
        """Prediction-correction step.

        Up to ``L`` prediction sweeps refine the stage extrapolants by solving
        the stage system with the nonlinear term lagged entirely on the
        right-hand side; the linear step then runs with the predicted ``u*``.
        Returns ``(new_state, stages, info)``; ``info.pc_iterations`` counts the
        sweeps performed.
        """
        if L < 0 or tol <= 0:
            raise ValueError("need L >= 0 and tol > 0")
        tab, tau = self.tableau, self.tau
        s = tab.s
        un = state.u.coeffs
        shape = un.shape
        u_m, Uh_m = self.extrapolate_history(state)
        iters, change = 0, float("nan")
        if L > 0:
            Uq_n = self._ev(state.Uh.coeffs)
            f = self.source_terms(state.t)
            for m in range(L):
                r = -self._pr(self.potential.H(self._ev(u_m)) * self._ev(Uh_m)).reshape(s, -1)
                if f is not None:
                    r = r + f
                xi, _ = self.solver.solve_free(r, un.ravel())
                xi = xi.reshape((s,) + shape)
                u_next = un + tau * np.einsum("ij,j...->i...", tab.A, xi)
                new_change = float(np.abs(self._ev(u_next - u_m)).max())
                if m > 0 and not new_change < change:
                    # the lagged iteration is not contracting (large tau): keep the
                    # last iterate instead of feeding a diverging guess to the step
                    log.debug("prediction stopped at sweep %d: change %.3e -> %.3e",
                              m + 1, change, new_change)
                    break
                l = 0.5 * self.potential.H(self._ev(u_next)) * self._ev(xi)
                Uh_m = self._pr(Uq_n + tau * np.einsum("ij,j...->i...", tab.A, l))
                change = new_change
                u_m = u_next
                iters = m + 1
                if change < tol:
                    break
        new, stages, info = self.leqrk_step(state, u_m)
        info.pc_iterations = iters
        info.pc_change = change
        return new, stages, info

    def run(self, state: StepState, n_steps: int, L: int = 2, tol: float = 1e-10,
            callback: Callable[[StepState, EnergyRecord], None] | None = None):
        """Advance ``n_steps`` steps; returns ``(final_state, records)``.

        ``records[0]`` describes the input state; each further record carries
        the energy drop and its lower bound for that step.
        """
        C0, vol = self.potential.C0, self.space.mesh.volume
        rec = discrete_energy(state.q, state.Uh, C0=C0, volume=vol, n=state.n, t=state.t)
        records = [rec]
        if callback is not None:
            callback(state, rec)
        for _ in range(n_steps):
            prev = rec.energy
            state, _, info = self.leqrk_pc_step(state, L, tol)
            rec = discrete_energy(state.q, state.Uh, C0=C0, volume=vol, n=state.n, t=state.t,
                                  dissipation=prev - info.energy, bound=info.bound,
                                  pc_iterations=info.pc_iterations)
            records.append(rec)
            if callback is not None:
                callback(state, rec)
        return state, records
