"""Structured quadrilateral meshes of the L-shaped domain and of rectangles."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np


class BoundaryTag(enum.Enum):
    """Boundary segments of the L-shape, listed in corner-precedence order."""

    Top = "top"
    Left = "left"
    Bottom = "bottom"
    LowerRight = "lower_right"
    CutVertical = "cut_vertical"
    CutHorizontal = "cut_horizontal"


class Side(enum.Enum):
    """Boundary sides of a rectangular mesh."""

    Top = "top"
    Left = "left"
    Bottom = "bottom"
    Right = "right"


# local edge order in every cell: bottom, right, top, left
# sign = outward normal relative to the edge's global normal (+y horizontal, +x vertical)
LOCAL_EDGE_SIGNS = np.array([-1.0, 1.0, 1.0, -1.0])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Axis-aligned square-cell mesh.

    ``cells`` hold vertex indices counterclockwise from the lower-left corner,
    ``cell_edges`` hold edge indices in the order bottom, right, top, left.
    Horizontal edges carry the global normal +y, vertical edges +x.
    """

    n: int
    h: float
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    boundary_faces: tuple[tuple[int, enum.Enum], ...]
    edge_cells: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def cell_edge_signs(self) -> np.ndarray:
        return np.broadcast_to(LOCAL_EDGE_SIGNS, self.cell_edges.shape)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def cell_centers(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @property
    def edge_midpoints(self) -> np.ndarray:
        return self.vertices[self.edges].mean(axis=1)

    @property
    def edge_normals(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        # horizontal edges -> +y, vertical edges -> +x
        return np.column_stack([np.abs(d[:, 1]), np.abs(d[:, 0])]) / self.h

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.array([e for e, _ in self.boundary_faces], dtype=int)

    def outward_sign(self, edge: int) -> float:
        """+1 if the edge's global normal points out of the domain."""
        c0, c1 = self.edge_cells[edge]
        if c1 >= 0:
            raise ValueError(f"edge {edge} is interior")
        k = int(np.nonzero(self.cell_edges[c0] == edge)[0][0])
        return float(LOCAL_EDGE_SIGNS[k])


def _structured_mesh(
    nx: int,
    ny: int,
    h: float,
    origin: tuple[float, float],
    keep_cell: Callable[[float, float], bool],
    classify: Callable[[float, float], enum.Enum],
    n: int,
) -> Mesh:
    x0, y0 = origin
    keep = np.array(
        [[keep_cell(x0 + (i + 0.5) * h, y0 + (j + 0.5) * h) for i in range(nx)] for j in range(ny)]
    )

    used = np.zeros((ny + 1, nx + 1), dtype=bool)
    for j, i in zip(*np.nonzero(keep)):
        used[j : j + 2, i : i + 2] = True
    vid = -np.ones((ny + 1, nx + 1), dtype=int)
    jj, ii = np.nonzero(used)  # row-major: lexicographic by (y, x)
    vid[jj, ii] = np.arange(len(jj))
    vertices = np.column_stack([x0 + ii * h, y0 + jj * h])

    cj, ci = np.nonzero(keep)
    cells = np.column_stack(
        [vid[cj, ci], vid[cj, ci + 1], vid[cj + 1, ci + 1], vid[cj + 1, ci]]
    )

    # collect edges keyed by (orientation, row, column), then order by midpoint (y, x)
    keys: dict[tuple[int, int, int], int] = {}
    raw: list[tuple[int, int, int]] = []
    for j, i in zip(cj, ci):
        for key in ((0, j, i), (1, j, i + 1), (0, j + 1, i), (1, j, i)):
            if key not in keys:
                keys[key] = -1
                raw.append(key)

    def midpoint(key: tuple[int, int, int]) -> tuple[float, float]:
        o, j, i = key
        return (j + 0.5, i) if o else (j, i + 0.5)

    raw.sort(key=midpoint)
    edges = np.empty((len(raw), 2), dtype=int)
    for e, key in enumerate(raw):
        keys[key] = e
        o, j, i = key
        edges[e] = (vid[j, i], vid[j + 1, i]) if o else (vid[j, i], vid[j, i + 1])

    cell_edges = np.array(
        [
            [keys[(0, j, i)], keys[(1, j, i + 1)], keys[(0, j + 1, i)], keys[(1, j, i)]]
            for j, i in zip(cj, ci)
        ],
        dtype=int,
    ).reshape(-1, 4)

    edge_cells = -np.ones((len(edges), 2), dtype=int)
    for c, row in enumerate(cell_edges):
        for e in row:
            slot = 0 if edge_cells[e, 0] < 0 else 1
            edge_cells[e, slot] = c

    mids = vertices[edges].mean(axis=1)
    boundary = tuple(
        (int(e), classify(*mids[e])) for e in np.nonzero(edge_cells[:, 1] < 0)[0]
    )
    return Mesh(
        n=n,
        h=h,
        vertices=vertices,
        cells=cells,
        edges=edges,
        cell_edges=cell_edges,
        boundary_faces=boundary,
        edge_cells=edge_cells,
    )


def _lshape_tag(x: float, y: float, tol: float = 1e-12) -> BoundaryTag:
    rules = (
        (BoundaryTag.Top, abs(y - 0.5) < tol and x <= tol),
        (BoundaryTag.Left, abs(x + 0.5) < tol),
        (BoundaryTag.Bottom, abs(y + 0.5) < tol),
        (BoundaryTag.LowerRight, abs(x - 0.5) < tol and y <= tol),
        (BoundaryTag.CutVertical, abs(x) < tol and y >= -tol),
        (BoundaryTag.CutHorizontal, abs(y) < tol and x >= -tol),
    )
    for tag, hit in rules:
        if hit:
            return tag
    raise ValueError(f"point ({x}, {y}) is not on the L-shape boundary")


def build_lshape_mesh(n: int) -> Mesh:
    """Mesh of (-0.5, 0.5)^2 minus [0, 0.5]^2 with n cells per unit length."""
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise ValueError(f"mesh resolution must be an even integer >= 2, got {n!r}")
    n = int(n)
    return _structured_mesh(
        n,
        n,
        1.0 / n,
        (-0.5, -0.5),
        keep_cell=lambda x, y: not (x > 0 and y > 0),
        classify=_lshape_tag,
        n=n,
    )


def build_rectangle_mesh(
    nx: int, ny: int, h: float, origin: tuple[float, float] = (0.0, 0.0)
) -> Mesh:
    """Rectangle [x0, x0 + nx h] x [y0, y0 + ny h] split into square cells."""
    if nx < 1 or ny < 1 or h <= 0:
        raise ValueError("rectangle mesh needs nx, ny >= 1 and h > 0")
    x0, y0 = origin
    x1, y1 = x0 + nx * h, y0 + ny * h
    tol = 1e-9 * h

    def classify(x: float, y: float) -> Side:
        if abs(y - y1) < tol:
            return Side.Top
        if abs(x - x0) < tol:
            return Side.Left
        if abs(y - y0) < tol:
            return Side.Bottom
        if abs(x - x1) < tol:
            return Side.Right
        raise ValueError(f"point ({x}, {y}) is not on the rectangle boundary")

    return _structured_mesh(
        nx, ny, h, origin, keep_cell=lambda x, y: True, classify=classify, n=round(1.0 / h)
    )


def boundary_faces_by_tag(mesh: Mesh, tag: enum.Enum) -> list[int]:
    return [e for e, t in mesh.boundary_faces if t is tag]


def boundary_vertices_by_tag(mesh: Mesh, tag: enum.Enum) -> np.ndarray:
    """Vertices touching at least one face with the given tag."""
    faces = boundary_faces_by_tag(mesh, tag)
    if not faces:
        return np.empty(0, dtype=int)
    return np.unique(mesh.edges[faces].ravel())


def dump_mesh(mesh: Mesh, path: str | Path) -> None:
    """Write ``id x y`` vertex lines followed by ``id v0 v1 v2 v3`` cell lines."""
    lines = [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.vertices)]
    lines += [f"{i} {a} {b} {c} {d}" for i, (a, b, c, d) in enumerate(mesh.cells)]
    Path(path).write_text("\n".join(lines) + "\n")
