"""Discrete spaces and block assembly for the three-field Biot system.

Displacement: continuous bilinear (Q1) per component, DOF ``2 * vertex + comp``.
Pressure: piecewise constant (P0), one DOF per cell.
Flux: lowest-order Raviart-Thomas (RT0), one DOF per edge holding the normal
component along the edge's global normal (+y for horizontal, +x for vertical).

Every cell is a square of side ``h``, so each local matrix is computed once
and scattered for all cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from .cases import CaseSpec, bc_table
from .materials import MaterialParams
from .mesh import BoundaryTag, Mesh, boundary_faces_by_tag

# local vertex coordinates of the reference square [0, 1]^2, counterclockwise
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def gauss_1d(order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_square(order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_1d(order)
    pts = np.array([[a, b] for b in x for a in x])
    wts = np.array([wa * wb for wb in w for wa in w])
    return pts, wts


def q1_shape(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values (npts, 4) and reference gradients (npts, 4, 2) of the Q1 basis."""
    xi = np.atleast_2d(xi)
    s, t = xi[:, 0:1], xi[:, 1:2]
    sx, ty = _REF_VERTS[:, 0], _REF_VERTS[:, 1]
    fs = np.where(sx == 1.0, s, 1.0 - s)
    ft = np.where(ty == 1.0, t, 1.0 - t)
    dfs = np.where(sx == 1.0, 1.0, -1.0)
    dft = np.where(ty == 1.0, 1.0, -1.0)
    vals = fs * ft
    grads = np.stack([dfs * ft, fs * dft], axis=-1)
    return vals, grads


def elasticity_element(h: float, mu: float, lam: float, order: int = 2) -> np.ndarray:
    """8x8 element matrix of 2 mu eps(u):eps(v) + lam div u div v on a square of side h."""
    pts, wts = gauss_square(order)
    _, grads = q1_shape(pts)
    grads = grads / h
    ke = np.zeros((8, 8))
    eye = np.eye(2)
    for g, w in zip(grads, wts):
        for a in range(4):
            for b in range(4):
                ga, gb = g[a], g[b]
                blk = mu * (eye * (ga @ gb) + np.outer(gb, ga)) + lam * np.outer(ga, gb)
                ke[2 * a : 2 * a + 2, 2 * b : 2 * b + 2] += w * h * h * blk
    return ke


def divergence_element(h: float) -> np.ndarray:
    """Length-8 vector of the cell integrals of div(N_a e_i), i.e. +-h/2 (exact)."""
    return (h * (_REF_VERTS - 0.5)).ravel()


def rt0_mass_element(h: float) -> np.ndarray:
    """4x4 RT0 mass matrix in local edge order (bottom, right, top, left).

    Basis functions use the global edge orientation, e.g. the bottom edge
    function is (0, (y1 - y) / h) and the top one (0, (y - y0) / h).
    """
    a, b = h * h / 3.0, h * h / 6.0
    return np.array(
        [
            [a, 0.0, b, 0.0],
            [0.0, a, 0.0, b],
            [b, 0.0, a, 0.0],
            [0.0, b, 0.0, a],
        ]
    )


def rt0_values(xi: np.ndarray) -> np.ndarray:
    """RT0 basis values (npts, 4, 2) at reference points, global orientation."""
    xi = np.atleast_2d(xi)
    s, t = xi[:, 0], xi[:, 1]
    z = np.zeros_like(s)
    return np.stack(
        [
            np.column_stack([z, 1.0 - t]),  # bottom
            np.column_stack([s, z]),  # right
            np.column_stack([z, t]),  # top
            np.column_stack([1.0 - s, z]),  # left
        ],
        axis=1,
    )


@dataclass(frozen=True, eq=False)
class DofLayout:
    """DOF counts, cell-to-DOF maps and the homogeneous essential constraints."""

    n_u: int
    n_p: int
    n_q: int
    cell_u: np.ndarray  # (cells, 8)
    cell_q: np.ndarray  # (cells, 4)
    fixed_u: np.ndarray  # sorted displacement DOF indices held at zero
    fixed_q: np.ndarray  # sorted edge indices with q.n = 0
    free_u: np.ndarray = field(init=False)
    free_q: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "free_u", np.setdiff1d(np.arange(self.n_u), self.fixed_u))
        object.__setattr__(self, "free_q", np.setdiff1d(np.arange(self.n_q), self.fixed_q))

    @property
    def cell_p(self) -> np.ndarray:
        return np.arange(self.n_p)

    @property
    def constrained_u(self) -> set[tuple[int, int]]:
        return {(int(d) // 2, int(d) % 2) for d in self.fixed_u}

    @property
    def constrained_q(self) -> set[int]:
        return {int(e) for e in self.fixed_q}


def layout_from_constraints(
    mesh: Mesh, fixed_u: Iterable[tuple[int, int]], fixed_q: Iterable[int]
) -> DofLayout:
    """Layout with the given (vertex, component) pairs and edges held at zero."""
    cell_u = np.empty((mesh.n_cells, 8), dtype=int)
    cell_u[:, 0::2] = 2 * mesh.cells
    cell_u[:, 1::2] = 2 * mesh.cells + 1
    dofs_u = sorted({2 * int(v) + int(c) for v, c in fixed_u})
    dofs_q = sorted({int(e) for e in fixed_q})
    for v, c in fixed_u:
        if not (0 <= v < mesh.n_vertices and c in (0, 1)):
            raise ValueError(f"invalid displacement constraint ({v}, {c})")
    if dofs_q and not (0 <= dofs_q[0] and dofs_q[-1] < mesh.n_edges):
        raise ValueError("flux constraint references a nonexistent edge")
    return DofLayout(
        n_u=2 * mesh.n_vertices,
        n_p=mesh.n_cells,
        n_q=mesh.n_edges,
        cell_u=cell_u,
        cell_q=mesh.cell_edges.copy(),
        fixed_u=np.array(dofs_u, dtype=int),
        fixed_q=np.array(dofs_q, dtype=int),
    )


def build_dof_layout(mesh: Mesh, case: CaseSpec) -> DofLayout:
    """Essential constraints of a test case; a vertex is fixed if any adjacent face fixes it."""
    table = bc_table(case)
    tags_present = {t for _, t in mesh.boundary_faces}
    unknown = set(table) - set(BoundaryTag)
    if unknown or not tags_present <= set(table):
        raise ValueError(f"boundary tags without a condition: {tags_present - set(table)}")
    fixed_u: set[tuple[int, int]] = set()
    fixed_q: list[int] = []
    for tag, bc in table.items():
        faces = boundary_faces_by_tag(mesh, tag)
        for comp in bc.fixed:
            fixed_u.update((int(v), comp) for v in mesh.edges[faces].ravel())
        if bc.flow == "no_flow":
            fixed_q.extend(faces)
        elif bc.flow != "pressure":
            raise ValueError(f"unknown flow condition {bc.flow!r} on {tag}")
    return layout_from_constraints(mesh, fixed_u, fixed_q)


def _scatter(rows: np.ndarray, cols: np.ndarray, local: np.ndarray, shape) -> sp.csr_matrix:
    """Sum the same local matrix into every cell's (rows, cols) block."""
    r = np.repeat(rows, cols.shape[1], axis=1).ravel()
    c = np.tile(cols, (1, rows.shape[1])).ravel()
    v = np.broadcast_to(local.ravel(), (rows.shape[0], local.size)).ravel()
    m = sp.coo_matrix((v, (r, c)), shape=shape).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def assemble_elasticity(mesh: Mesh, layout: DofLayout, mu: float, lam: float) -> sp.csr_matrix:
    if not mu > 0:
        raise ValueError(f"shear modulus must be positive, got {mu}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    ke = elasticity_element(mesh.h, mu, lam)
    ke = 0.5 * (ke + ke.T)
    return _scatter(layout.cell_u, layout.cell_u, ke, (layout.n_u, layout.n_u))


def assemble_coupling(mesh: Mesh, layout: DofLayout, alpha: float) -> sp.csr_matrix:
    """B with B[c, j] = alpha * integral over cell c of div(phi_j), shape (n_p, n_u)."""
    if not 0 < alpha <= 1:
        raise ValueError(f"Biot coefficient must lie in (0, 1], got {alpha}")
    be = alpha * divergence_element(mesh.h)
    return _scatter(layout.cell_p[:, None], layout.cell_u, be[None, :], (layout.n_p, layout.n_u))


def assemble_flux_mass(mesh: Mesh, layout: DofLayout, scale: float = 1.0) -> sp.csr_matrix:
    me = scale * rt0_mass_element(mesh.h)
    return _scatter(layout.cell_q, layout.cell_q, me, (layout.n_q, layout.n_q))


def assemble_divergence(mesh: Mesh, layout: DofLayout) -> sp.csr_matrix:
    """D with D[c, e] = integral over cell c of div(psi_e) = +-h, shape (n_p, n_q)."""
    de = mesh.cell_edge_signs[0] * mesh.h
    return _scatter(layout.cell_p[:, None], layout.cell_q, de[None, :], (layout.n_p, layout.n_q))


@dataclass(frozen=True, eq=False)
class FlowBlocks:
    M_qq: sp.csr_matrix
    D_qp: sp.csr_matrix
    M_pp: np.ndarray  # diagonal, (1/M + alpha^2/K_dr) |c| / dt


@dataclass(frozen=True, eq=False)
class SystemBlocks:
    """All matrices of one discretized case for a fixed time step.

    ``S_pp`` is the physical storage diagonal |c| / (M dt); ``M_pp`` adds the
    fixed-stress stabilization alpha^2 |c| / (K_dr dt) and is ``None`` when
    no K_dr was given.
    """

    A_uu: sp.csr_matrix
    B_up: sp.csr_matrix
    M_qq: sp.csr_matrix
    D_qp: sp.csr_matrix
    S_pp: np.ndarray
    M_pp: np.ndarray | None
    dt: float
    kdr: float | None
    params: MaterialParams


def _check_flow(params: MaterialParams, kdr: float | None, dt: float) -> None:
    bad = [
        name
        for name, v in (("k", params.k), ("eta", params.eta), ("M", params.M), ("dt", dt))
        if not v > 0
    ]
    if kdr is not None and not kdr > 0:
        bad.append("K_dr")
    if bad:
        raise ValueError(f"nonpositive flow parameters: {', '.join(bad)}")


def assemble_flow_blocks(
    mesh: Mesh, layout: DofLayout, params: MaterialParams, kdr: float, dt: float
) -> FlowBlocks:
    _check_flow(params, kdr, dt)
    area = np.full(layout.n_p, mesh.cell_area)
    m_pp = (1.0 / params.M + params.alpha**2 / kdr) * area / dt
    return FlowBlocks(
        M_qq=assemble_flux_mass(mesh, layout, params.eta / params.k),
        D_qp=assemble_divergence(mesh, layout),
        M_pp=m_pp,
    )


def assemble_system(
    mesh: Mesh,
    layout: DofLayout,
    params: MaterialParams,
    dt: float,
    kdr: float | None = None,
) -> SystemBlocks:
    _check_flow(params, kdr, dt)
    area = np.full(layout.n_p, mesh.cell_area)
    return SystemBlocks(
        A_uu=assemble_elasticity(mesh, layout, params.mu, params.lam),
        B_up=assemble_coupling(mesh, layout, params.alpha),
        M_qq=assemble_flux_mass(mesh, layout, params.eta / params.k),
        D_qp=assemble_divergence(mesh, layout),
        S_pp=area / (params.M * dt),
        M_pp=None if kdr is None else (1.0 / params.M + params.alpha**2 / kdr) * area / dt,
        dt=dt,
        kdr=kdr,
        params=params,
    )


@dataclass(frozen=True, eq=False)
class Loads:
    f_u: np.ndarray
    f_q: np.ndarray
    f_p: np.ndarray

    @classmethod
    def zeros(cls, layout: DofLayout) -> "Loads":
        return cls(np.zeros(layout.n_u), np.zeros(layout.n_q), np.zeros(layout.n_p))

    def __add__(self, other: "Loads") -> "Loads":
        return Loads(self.f_u + other.f_u, self.f_q + other.f_q, self.f_p + other.f_p)

    def scaled(self, s: float) -> "Loads":
        return Loads(s * self.f_u, s * self.f_q, s * self.f_p)


def assemble_traction(
    mesh: Mesh,
    layout: DofLayout,
    edges: Iterable[int],
    traction: Callable[[np.ndarray], np.ndarray],
    order: int = 2,
) -> np.ndarray:
    """Integrate a traction field (points (m, 2) -> values (m, 2)) against Q1 traces."""
    f = np.zeros(layout.n_u)
    s, w = gauss_1d(order)
    for e in edges:
        v0, v1 = mesh.edges[e]
        x0, x1 = mesh.vertices[v0], mesh.vertices[v1]
        pts = x0[None, :] + s[:, None] * (x1 - x0)[None, :]
        tr = np.asarray(traction(pts), dtype=float).reshape(len(s), 2)
        for v, phi in ((v0, 1.0 - s), (v1, s)):
            f[2 * v : 2 * v + 2] += mesh.h * np.einsum("q,q,qi->i", w, phi, tr)
    return f


def assemble_pressure_boundary(
    mesh: Mesh,
    layout: DofLayout,
    edges: Iterable[int],
    p_d: Callable[[np.ndarray], np.ndarray],
    order: int = 2,
) -> np.ndarray:
    """Natural boundary term -<p_D, psi.n_out> of Darcy's law on the given edges."""
    f = np.zeros(layout.n_q)
    s, w = gauss_1d(order)
    for e in edges:
        v0, v1 = mesh.edges[e]
        x0, x1 = mesh.vertices[v0], mesh.vertices[v1]
        pts = x0[None, :] + s[:, None] * (x1 - x0)[None, :]
        f[e] -= mesh.outward_sign(e) * mesh.h * float(w @ np.asarray(p_d(pts), dtype=float))
    return f


def assemble_body_force(
    mesh: Mesh, layout: DofLayout, force: Callable[[np.ndarray], np.ndarray], order: int = 3
) -> np.ndarray:
    """Integrate a vector body force (points (m, 2) -> (m, 2)) against Q1 functions."""
    pts, wts = gauss_square(order)
    vals, _ = q1_shape(pts)
    xy = mesh.vertices[mesh.cells[:, 0]][:, None, :] + mesh.h * pts[None, :, :]
    fv = np.asarray(force(xy.reshape(-1, 2)), dtype=float).reshape(mesh.n_cells, len(wts), 2)
    local = np.einsum("q,qa,cqi->cai", wts, vals, fv).reshape(mesh.n_cells, 8) * mesh.cell_area
    f = np.zeros(layout.n_u)
    np.add.at(f, layout.cell_u, local)
    return f


def assemble_flux_source(
    mesh: Mesh, layout: DofLayout, force: Callable[[np.ndarray], np.ndarray], order: int = 3
) -> np.ndarray:
    """Integrate a vector field against RT0 functions (e.g. rho_f g in Darcy's law)."""
    pts, wts = gauss_square(order)
    psi = rt0_values(pts)
    xy = mesh.vertices[mesh.cells[:, 0]][:, None, :] + mesh.h * pts[None, :, :]
    fv = np.asarray(force(xy.reshape(-1, 2)), dtype=float).reshape(mesh.n_cells, len(wts), 2)
    local = np.einsum("q,qei,cqi->ce", wts, psi, fv) * mesh.cell_area
    f = np.zeros(layout.n_q)
    np.add.at(f, layout.cell_q, local)
    return f


def assemble_cell_source(
    mesh: Mesh, layout: DofLayout, source: Callable[[np.ndarray], np.ndarray], order: int = 3
) -> np.ndarray:
    """Cell integrals of a scalar source (points (m, 2) -> (m,))."""
    pts, wts = gauss_square(order)
    xy = mesh.vertices[mesh.cells[:, 0]][:, None, :] + mesh.h * pts[None, :, :]
    sv = np.asarray(source(xy.reshape(-1, 2)), dtype=float).reshape(mesh.n_cells, len(wts))
    return (sv @ wts) * mesh.cell_area


def assemble_loads(mesh: Mesh, layout: DofLayout, case: CaseSpec, t: float) -> Loads:
    """Loads of a test case at time t: top traction, zero p_D, gravity terms."""
    table = bc_table(case)
    loaded = [e for tag, bc in table.items() if bc.loaded for e in boundary_faces_by_tag(mesh, tag)]
    sigma = case.traction(t)
    f_u = assemble_traction(mesh, layout, loaded, lambda x: np.tile([0.0, sigma], (len(x), 1)))
    g = case.params.gravity
    f_q = np.zeros(layout.n_q)
    if np.any(g):
        f_u += assemble_body_force(mesh, layout, lambda x: np.tile(case.params.rho_b * g, (len(x), 1)))
        f_q += assemble_flux_source(mesh, layout, lambda x: np.tile(case.params.rho_f * g, (len(x), 1)))
    # p_D = 0 on the drained boundary: its natural term vanishes
    return Loads(f_u=f_u, f_q=f_q, f_p=np.zeros(layout.n_p))


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Blocks restricted to free displacement and flux DOFs."""

    A: sp.csr_matrix
    B: sp.csr_matrix  # (n_p, free_u)
    M_qq: sp.csr_matrix
    D: sp.csr_matrix  # (n_p, free_q)
    layout: DofLayout

    def restrict_u(self, v: np.ndarray) -> np.ndarray:
        return v[self.layout.free_u]

    def restrict_q(self, v: np.ndarray) -> np.ndarray:
        return v[self.layout.free_q]

    def extend_u(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.layout.n_u)
        out[self.layout.free_u] = v
        return out

    def extend_q(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.layout.n_q)
        out[self.layout.free_q] = v
        return out


def apply_constraints(blocks: SystemBlocks, layout: DofLayout) -> ReducedSystem:
    """Symmetric elimination of the homogeneous essential constraints."""
    fu, fq = layout.free_u, layout.free_q
    A = blocks.A_uu[fu][:, fu].tocsr()
    M = blocks.M_qq[fq][:, fq].tocsr()
    for m in (A, M):
        m.sort_indices()
    return ReducedSystem(
        A=A,
        B=blocks.B_up[:, fu].tocsr(),
        M_qq=M,
        D=blocks.D_qp[:, fq].tocsr(),
        layout=layout,
    )


def dump_matrix(matrix: sp.spmatrix, path: str | Path) -> None:
    """Write ``row col value`` triples, one nonzero per line."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = (f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]))
    Path(path).write_text("\n".join(lines) + "\n")
