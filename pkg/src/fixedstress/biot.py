"""Fixed-stress splitting for the discretized three-field Biot system.

Each splitting iteration first solves the mixed flow problem with the
volumetric stress K_dr div u - alpha p frozen at the previous iterate, then
the elasticity problem with the new pressure.  A direct solve of the fully
coupled system provides the reference solution for the splitting's fixed point.

Discrete time-step equations (backward Euler, S = |c| / (M dt)):

    A u - B^T p                      = f_u
    S (p - p_old) + B (u - u_old)/dt + D q = f_p
    M_qq q - D^T p                   = f_q

In SI units the three row blocks differ by up to twenty orders of
magnitude, so the factorized systems carry the momentum rows divided by
2 mu + lambda, the mass rows multiplied by dt and the Darcy rows multiplied
by k/eta.  Solutions are unchanged, and the residual of a double-precision
solve stays at rounding level relative to the right-hand side.
"""
from __future__ import annotations

import functools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .assembly import (
    DofLayout,
    Loads,
    ReducedSystem,
    SystemBlocks,
    apply_constraints,
    assemble_loads,
    assemble_system,
    build_dof_layout,
)
from .cases import DT, T_END, CaseSpec
from .linsolve import Factorization
from .materials import MaterialParams, lame_from_young_poisson
from .mesh import Mesh, build_lshape_mesh
from .tuning import TuningSpec, TuningVariant, resolve_kdr

__all__ = [
    "MaterialParams",
    "lame_from_young_poisson",
    "TuningSpec",
    "TuningVariant",
    "resolve_kdr",
    "SolutionState",
    "StoppingConfig",
    "TimestepReport",
    "SimulationReport",
    "BiotProblem",
    "FixedStressSolver",
    "flow_substep",
    "mechanics_substep",
    "stopping_check",
    "advance_timestep",
    "monolithic_step",
    "monolithic_residual",
    "run_simulation",
]

log = logging.getLogger(__name__)


@dataclass
class SolutionState:
    u: np.ndarray
    p: np.ndarray
    q: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, layout: DofLayout, t: float = 0.0) -> "SolutionState":
        return cls(np.zeros(layout.n_u), np.zeros(layout.n_p), np.zeros(layout.n_q), t)

    def fields(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u, self.p, self.q

    def copy(self) -> "SolutionState":
        return SolutionState(self.u.copy(), self.p.copy(), self.q.copy(), self.t)


@dataclass(frozen=True)
class StoppingConfig:
    """Increment test ``||dx|| <= tol_abs_x + tol_rel ||x||`` for x in (u, p, q).

    ``divergence_factor`` aborts a step early once the relative increment has
    grown by that factor over the first iteration's; ``None`` disables it.
    """

    tol_rel: float = 1e-6
    tol_abs: tuple[float, float, float] = (1e-10, 1e-10, 1e-10)
    max_iter: int = 2000
    divergence_factor: float | None = 1e8

    def __post_init__(self) -> None:
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if len(self.tol_abs) != 3 or min(self.tol_abs) < 0:
            raise ValueError("tol_abs needs three nonnegative entries (u, p, q)")


@dataclass
class TimestepReport:
    iterations: int
    converged: bool
    increments: tuple[float, float, float]
    t: float = 0.0
    diverged: bool = False


@dataclass
class SimulationReport:
    kdr: float
    accumulated_iterations: int
    converged: bool
    steps: list[TimestepReport]
    wall_s: float
    final_state: SolutionState
    states: list[SolutionState] = field(default_factory=list)


class BiotProblem:
    """A discretized problem: mesh, constraints, K_dr-independent blocks and loads.

    The mechanics factorization and the monolithic factorization are built on
    first use and shared by every splitting solver derived from the problem.
    """

    def __init__(
        self,
        mesh: Mesh,
        layout: DofLayout,
        params: MaterialParams,
        dt: float,
        loads: Callable[[float], Loads],
    ):
        self.mesh = mesh
        self.layout = layout
        self.params = params
        self.dt = dt
        self.loads = loads
        self.blocks: SystemBlocks = assemble_system(mesh, layout, params, dt)
        self.reduced: ReducedSystem = apply_constraints(self.blocks, layout)
        self.area = np.full(layout.n_p, mesh.cell_area)
        self.momentum_scale = 1.0 / (2.0 * params.mu + params.lam)
        self.darcy_scale = params.k / params.eta
        self._mech: Factorization | None = None
        self._mono: Factorization | None = None

    @classmethod
    def from_case(cls, case: CaseSpec, n: int = 16, dt: float = DT) -> "BiotProblem":
        mesh = build_lshape_mesh(n)
        layout = build_dof_layout(mesh, case)
        return cls(mesh, layout, case.params, dt, lambda t: assemble_loads(mesh, layout, case, t))

    @property
    def mechanics_factor(self) -> Factorization:
        if self._mech is None:
            self._mech = Factorization(self.reduced.A)
        return self._mech

    @property
    def monolithic_factor(self) -> Factorization:
        if self._mono is None:
            r, S, dt, s, m = self.reduced, self.blocks.S_pp, self.dt, self.darcy_scale, self.momentum_scale
            self._mono = Factorization(
                sp.bmat(
                    [
                        [m * r.A, -m * r.B.T, None],
                        [-r.B, -sp.diags(dt * S), -dt * r.D],
                        [None, -s * r.D.T, s * r.M_qq],
                    ],
                    format="csr",
                )
            )
        return self._mono

    def splitting(self, kdr: float) -> "FixedStressSolver":
        return FixedStressSolver(self, kdr)


class FixedStressSolver:
    """Factorized flow system for one K_dr plus the problem's mechanics factor."""

    def __init__(self, problem: BiotProblem, kdr: float):
        if not kdr > 0:
            raise ValueError(f"K_dr must be positive, got {kdr}")
        self.problem = problem
        self.kdr = kdr
        p = problem.params
        dt = problem.dt
        self.stab = p.alpha**2 / kdr * problem.area / dt
        self.m_pp = problem.blocks.S_pp + self.stab
        r, s = problem.reduced, problem.darcy_scale
        self.flow_factor = Factorization(
            sp.bmat([[s * r.M_qq, -s * r.D.T], [-dt * r.D, -sp.diags(dt * self.m_pp)]], format="csr")
        )
        self.mechanics_factor = problem.mechanics_factor
        self._nq = r.M_qq.shape[0]


def flow_substep(
    prev_time: SolutionState,
    prev_iter: SolutionState,
    solver: FixedStressSolver,
    loads: Loads,
) -> tuple[np.ndarray, np.ndarray]:
    """Mixed flow solve with the volumetric stress frozen at ``prev_iter``."""
    prob = solver.problem
    B, dt = prob.blocks.B_up, prob.dt
    rhs_p = (
        prob.blocks.S_pp * prev_time.p
        + solver.stab * prev_iter.p
        - (B @ (prev_iter.u - prev_time.u)) / dt
        + loads.f_p
    )
    rhs = np.concatenate([prob.darcy_scale * prob.reduced.restrict_q(loads.f_q), -dt * rhs_p])
    x = solver.flow_factor.solve(rhs)
    return x[solver._nq :], prob.reduced.extend_q(x[: solver._nq])


def mechanics_substep(p_new: np.ndarray, problem: BiotProblem, loads: Loads) -> np.ndarray:
    """Elasticity solve A u = f_u + B^T p on the free displacement DOFs."""
    r = problem.reduced
    rhs = r.restrict_u(loads.f_u) + r.B.T @ p_new
    return r.extend_u(problem.mechanics_factor.solve(rhs))


def stopping_check(
    du: np.ndarray,
    dp: np.ndarray,
    dq: np.ndarray,
    u: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    cfg: StoppingConfig,
) -> bool:
    for d, x, tol_abs in zip((du, dp, dq), (u, p, q), cfg.tol_abs):
        if not np.linalg.norm(d) <= tol_abs + cfg.tol_rel * np.linalg.norm(x):
            return False
    return True


def advance_timestep(
    prev: SolutionState,
    solver: FixedStressSolver,
    cfg: StoppingConfig,
    t: float,
    loads: Loads | None = None,
) -> tuple[SolutionState, TimestepReport]:
    """Iterate flow and mechanics substeps from ``prev`` until the increments are small.

    One flow solve plus one mechanics solve counts as one iteration.
    """
    prob = solver.problem
    loads = prob.loads(t) if loads is None else loads
    it = prev
    first = None
    incs = (np.inf, np.inf, np.inf)
    for i in range(1, cfg.max_iter + 1):
        p, q = flow_substep(prev, it, solver, loads)
        u = mechanics_substep(p, prob, loads)
        du, dp, dq = u - it.u, p - it.p, q - it.q
        new = SolutionState(u, p, q, t)
        incs = tuple(float(np.linalg.norm(d)) for d in (du, dp, dq))
        if stopping_check(du, dp, dq, u, p, q, cfg):
            return new, TimestepReport(i, True, incs, t)
        rel = max(n / (np.linalg.norm(x) + tiny) if n else 0.0 for n, x, tiny in zip(incs, (u, p, q), cfg.tol_abs))
        if not np.isfinite(rel):
            return new, TimestepReport(i, False, incs, t, diverged=True)
        if first is None:
            first = rel
        elif cfg.divergence_factor is not None and rel > cfg.divergence_factor * first:
            return new, TimestepReport(i, False, incs, t, diverged=True)
        it = new
    return it, TimestepReport(cfg.max_iter, False, incs, t)


def monolithic_step(prev: SolutionState, problem: BiotProblem, t: float, loads: Loads | None = None) -> SolutionState:
    """One backward-Euler step of the fully coupled system, solved directly."""
    loads = problem.loads(t) if loads is None else loads
    r, blk, dt = problem.reduced, problem.blocks, problem.dt
    rhs = np.concatenate(
        [
            problem.momentum_scale * r.restrict_u(loads.f_u),
            -(dt * blk.S_pp * prev.p + blk.B_up @ prev.u) - dt * loads.f_p,
            problem.darcy_scale * r.restrict_q(loads.f_q),
        ]
    )
    x = problem.monolithic_factor.solve(rhs)
    nu, np_ = len(problem.layout.free_u), problem.layout.n_p
    return SolutionState(
        r.extend_u(x[:nu]), x[nu : nu + np_].copy(), r.extend_q(x[nu + np_ :]), t
    )


def monolithic_residual(
    problem: BiotProblem, prev: SolutionState, state: SolutionState, loads: Loads | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residuals of momentum (free rows), mass, and Darcy (free rows) at ``state``."""
    loads = problem.loads(state.t) if loads is None else loads
    blk, r, dt = problem.blocks, problem.reduced, problem.dt
    r_u = r.restrict_u(blk.A_uu @ state.u - blk.B_up.T @ state.p - loads.f_u)
    r_p = (
        blk.S_pp * (state.p - prev.p)
        + blk.B_up @ (state.u - prev.u) / dt
        + blk.D_qp @ state.q
        - loads.f_p
    )
    r_q = r.restrict_q(blk.M_qq @ state.q - blk.D_qp.T @ state.p - loads.f_q)
    return r_u, r_p, r_q


def time_grid(dt: float, t_end: float) -> np.ndarray:
    steps = t_end / dt
    n_steps = int(round(steps))
    if n_steps < 1 or abs(steps - n_steps) > 1e-9 * max(1.0, steps):
        raise ValueError(f"t_end / dt must be a positive integer, got {steps}")
    return dt * np.arange(1, n_steps + 1)


@functools.lru_cache(maxsize=8)
def cached_problem(case: CaseSpec, n: int, dt: float) -> BiotProblem:
    return BiotProblem.from_case(case, n, dt)


def run_simulation(
    case: CaseSpec,
    tuning: TuningSpec,
    cfg: StoppingConfig | None = None,
    n: int = 16,
    dt: float = DT,
    t_end: float = T_END,
    keep_states: bool = False,
    stop_on_failure: bool = True,
) -> SimulationReport:
    """March the fixed-stress scheme over (0, t_end] and accumulate iteration counts.

    With ``stop_on_failure`` the run ends at the first step that misses the
    tolerance; the report is then flagged nonconverged and its count covers
    the steps taken.
    """
    cfg = cfg or StoppingConfig()
    start = time.perf_counter()
    times = time_grid(dt, t_end)
    kdr = resolve_kdr(tuning, case.params.mu, case.params.lam)
    problem = cached_problem(case, n, dt)
    solver = problem.splitting(kdr)
    state = SolutionState.zeros(problem.layout)
    reports: list[TimestepReport] = []
    states: list[SolutionState] = []
    for t in times:
        state, rep = advance_timestep(state, solver, cfg, float(t))
        reports.append(rep)
        if keep_states:
            states.append(state)
        if not rep.converged:
            log.debug("case %s K_dr=%.6g: step t=%.4g failed", case.id.value, kdr, t)
            if stop_on_failure:
                break
    return SimulationReport(
        kdr=kdr,
        accumulated_iterations=sum(r.iterations for r in reports),
        converged=all(r.converged for r in reports) and len(reports) == len(times),
        steps=reports,
        wall_s=time.perf_counter() - start,
        final_state=state,
        states=states,
    )


def run_monolithic(
    problem: BiotProblem, dt: float = DT, t_end: float = T_END
) -> list[SolutionState]:
    state = SolutionState.zeros(problem.layout)
    out = []
    for t in time_grid(dt, t_end):
        state = monolithic_step(state, problem, float(t))
        out.append(state)
    return out
