"""Discretization checks: a manufactured solution on the unit square and
Terzaghi's one-dimensional consolidation series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import (
    Loads,
    assemble_body_force,
    assemble_cell_source,
    assemble_pressure_boundary,
    gauss_square,
    layout_from_constraints,
    q1_shape,
    rt0_values,
)
from .biot import BiotProblem, SolutionState, monolithic_step
from .materials import MaterialParams
from .mesh import Mesh, build_rectangle_mesh

PI = np.pi


@dataclass(frozen=True)
class Manufactured:
    """u = (sin(pi x) sin(pi y), sin(2 pi x) sin(pi y)), p = cos(pi x) cos(2 pi y) + x,
    q = -(k/eta) grad p, one backward-Euler step of length dt from a zero state."""

    params: MaterialParams = MaterialParams(mu=1.0, lam=2.0, alpha=0.9, M=1.0, k=1.0, eta=1.0)
    dt: float = 1.0

    def u(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[:, 0], x[:, 1]
        return np.column_stack([np.sin(PI * X) * np.sin(PI * Y), np.sin(2 * PI * X) * np.sin(PI * Y)])

    def grad_u(self, x: np.ndarray) -> np.ndarray:
        """(m, 2, 2) with [i, j] = d u_i / d x_j."""
        X, Y = x[:, 0], x[:, 1]
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = PI * np.cos(PI * X) * np.sin(PI * Y)
        g[:, 0, 1] = PI * np.sin(PI * X) * np.cos(PI * Y)
        g[:, 1, 0] = 2 * PI * np.cos(2 * PI * X) * np.sin(PI * Y)
        g[:, 1, 1] = PI * np.sin(2 * PI * X) * np.cos(PI * Y)
        return g

    def p(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[:, 0], x[:, 1]
        return np.cos(PI * X) * np.cos(2 * PI * Y) + X

    def grad_p(self, x: np.ndarray) -> np.ndarray:
        X, Y = x[:, 0], x[:, 1]
        return np.column_stack(
            [-PI * np.sin(PI * X) * np.cos(2 * PI * Y) + 1.0, -2 * PI * np.cos(PI * X) * np.sin(2 * PI * Y)]
        )

    def q(self, x: np.ndarray) -> np.ndarray:
        return -(self.params.k / self.params.eta) * self.grad_p(x)

    def div_u(self, x: np.ndarray) -> np.ndarray:
        g = self.grad_u(x)
        return g[:, 0, 0] + g[:, 1, 1]

    def body_force(self, x: np.ndarray) -> np.ndarray:
        """-div(2 mu eps(u) + lam div u I - alpha p I) = -mu lap u - (mu + lam) grad div u + alpha grad p."""
        X, Y = x[:, 0], x[:, 1]
        mu, lam, alpha = self.params.mu, self.params.lam, self.params.alpha
        u = self.u(x)
        dx_div = -PI**2 * np.sin(PI * X) * np.sin(PI * Y) + 2 * PI**2 * np.cos(2 * PI * X) * np.cos(PI * Y)
        dy_div = PI**2 * np.cos(PI * X) * np.cos(PI * Y) - PI**2 * np.sin(2 * PI * X) * np.sin(PI * Y)
        gp = self.grad_p(x)
        f1 = 2 * mu * PI**2 * u[:, 0] - (mu + lam) * dx_div + alpha * gp[:, 0]
        f2 = 5 * mu * PI**2 * u[:, 1] - (mu + lam) * dy_div + alpha * gp[:, 1]
        return np.column_stack([f1, f2])

    def mass_source(self, x: np.ndarray) -> np.ndarray:
        """(p / M + alpha div u) / dt + div q with zero previous state."""
        X, Y = x[:, 0], x[:, 1]
        prm = self.params
        div_q = 5 * PI**2 * (prm.k / prm.eta) * np.cos(PI * X) * np.cos(2 * PI * Y)
        return (self.p(x) / prm.M + prm.alpha * self.div_u(x)) / self.dt + div_q


def _quad_points(mesh: Mesh, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pts, wts = gauss_square(order)
    xy = mesh.vertices[mesh.cells[:, 0]][:, None, :] + mesh.h * pts[None, :, :]
    return pts, wts * mesh.cell_area, xy


def field_errors(mesh: Mesh, state: SolutionState, exact: Manufactured, order: int = 4) -> dict[str, float]:
    """L2 errors of p and q and the H1-seminorm error of u."""
    pts, wts, xy = _quad_points(mesh, order)
    nc, nq = mesh.n_cells, len(wts)
    flat = xy.reshape(-1, 2)

    p_err = (state.p[:, None] - exact.p(flat).reshape(nc, nq)) ** 2

    psi = rt0_values(pts)  # (nq, 4, 2)
    qh = np.einsum("ce,qei->cqi", state.q[mesh.cell_edges], psi)
    q_err = ((qh - exact.q(flat).reshape(nc, nq, 2)) ** 2).sum(axis=-1)

    _, grads = q1_shape(pts)
    grads = grads / mesh.h  # (nq, 4, 2)
    uc = state.u.reshape(-1, 2)[mesh.cells]  # (nc, 4, 2)
    guh = np.einsum("cai,qaj->cqij", uc, grads)
    u_err = ((guh - exact.grad_u(flat).reshape(nc, nq, 2, 2)) ** 2).sum(axis=(-1, -2))

    return {
        "p_l2": float(np.sqrt((p_err * wts).sum())),
        "q_l2": float(np.sqrt((q_err * wts).sum())),
        "u_h1": float(np.sqrt((u_err * wts).sum())),
    }


def solve_manufactured(n: int, exact: Manufactured | None = None) -> tuple[Mesh, SolutionState]:
    """Monolithic solve on the unit square with u = 0 and p = p_exact on the boundary."""
    exact = exact or Manufactured()
    mesh = build_rectangle_mesh(n, n, 1.0 / n)
    boundary_vertices = np.unique(mesh.edges[mesh.boundary_edges].ravel())
    layout = layout_from_constraints(mesh, [(int(v), c) for v in boundary_vertices for c in (0, 1)], [])
    loads = Loads(
        f_u=assemble_body_force(mesh, layout, exact.body_force),
        f_q=assemble_pressure_boundary(mesh, layout, mesh.boundary_edges, exact.p),
        f_p=assemble_cell_source(mesh, layout, exact.mass_source),
    )
    problem = BiotProblem(mesh, layout, exact.params, exact.dt, lambda t: loads)
    state = monolithic_step(SolutionState.zeros(layout), problem, exact.dt)
    return mesh, state


def convergence_study(ns: tuple[int, ...] = (4, 8, 16, 32)) -> dict[str, list[float]]:
    """Errors per field for each n, plus observed orders between successive meshes."""
    exact = Manufactured()
    errors = [field_errors(*solve_manufactured(n, exact), exact) for n in ns]
    out: dict[str, list[float]] = {}
    for key in ("p_l2", "q_l2", "u_h1"):
        e = [err[key] for err in errors]
        out[key] = e
        out[f"{key}_order"] = [
            float(np.log(e[i] / e[i + 1]) / np.log(ns[i + 1] / ns[i])) for i in range(len(ns) - 1)
        ]
    return out


def terzaghi_pressure(
    depth: np.ndarray, t: float, height: float, consolidation_coeff: float, p0: float, terms: int = 200
) -> np.ndarray:
    """Pore pressure at ``depth`` below a drained top of a column with an impervious base."""
    z = np.asarray(depth, dtype=float)
    m = np.arange(terms)[:, None]
    lam = (2 * m + 1) * PI / (2 * height)
    series = 4.0 / ((2 * m + 1) * PI) * np.sin(lam * z[None, :]) * np.exp(-(lam**2) * consolidation_coeff * t)
    return p0 * series.sum(axis=0)


def undrained_pressure(params: MaterialParams, load: float) -> float:
    """Instantaneous pore pressure of a laterally confined column under a vertical load."""
    kv = params.lam + 2 * params.mu
    return params.alpha * params.M * load / (kv + params.alpha**2 * params.M)


def consolidation_coefficient(params: MaterialParams) -> float:
    kv = params.lam + 2 * params.mu
    return (params.k / params.eta) / (1.0 / params.M + params.alpha**2 / kv)
