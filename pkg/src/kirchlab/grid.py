"""Uniform rectangular grid with staggered (face-based) first derivatives.

Interior nodes carry the unknowns; the homogeneous Dirichlet boundary is
implicit (ghost value 0 one node outside each edge).  Gradients live on the
faces between nodes, divergences back at the nodes:

        |       |       |
    --- x --gx--x--gx-- x ---        x  : interior nodes (nx per row)
        |       |       |            gx : x-faces, nx+1 per row
        gy      gy      gy           gy : y-faces, ny+1 per column
        |       |       |

With zero ghosts the pair (gradient, -divergence) is an exact discrete
adjoint, so the Green identity  sum u * div F = -sum F . grad u  holds to
roundoff for every face field F.  All quadrature is the midpoint rule
hx*hy*sum over interior nodes.

Node storage is row-major with x fastest: values.reshape(ny, nx)[j, i] is
the node at (x0 + (i+1)*hx, y0 + (j+1)*hy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """nx-by-ny interior nodes over the rectangle [x0, x0+Lx] x [y0, y0+Ly]."""

    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    hx: float = 0.0
    hy: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid needs at least one interior node per axis, got {self.nx}x{self.ny}")
        if not (self.hx > 0.0 and self.hy > 0.0):
            raise ValueError(f"mesh widths must be positive, got hx={self.hx}, hy={self.hy}")

    @staticmethod
    def over_rectangle(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0,
                       x0: float = 0.0, y0: float = 0.0) -> "Grid":
        """Grid with nx x ny interior nodes on a rectangle of side lengths lx, ly."""
        return Grid(nx, ny, x0, y0, lx / (nx + 1), ly / (ny + 1))

    @property
    def lx(self) -> float:
        return (self.nx + 1) * self.hx

    @property
    def ly(self) -> float:
        return (self.ny + 1) * self.hy

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids (X, Y) of interior node coordinates, each shaped (ny, nx)."""
        xs = self.x0 + self.hx * np.arange(1, self.nx + 1)
        ys = self.y0 + self.hy * np.arange(1, self.ny + 1)
        return np.meshgrid(xs, ys)


@dataclass
class ScalarField:
    """Real values on the interior nodes of a grid (flat, row-major, x fastest)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.grid.n_nodes:
            raise ValueError(
                f"field length {self.values.size} does not match grid with {self.grid.n_nodes} nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @staticmethod
    def zeros(grid: Grid) -> "ScalarField":
        return ScalarField(grid, np.zeros(grid.n_nodes))

    @staticmethod
    def full(grid: Grid, value: float) -> "ScalarField":
        return ScalarField(grid, np.full(grid.n_nodes, float(value)))

    @property
    def mat(self) -> np.ndarray:
        """(ny, nx) view of the values, rows indexed by y."""
        return self.values.reshape(self.grid.ny, self.grid.nx)


@dataclass
class FaceField:
    """Values on the faces between nodes: xfaces (ny, nx+1), yfaces (ny+1, nx)."""

    grid: Grid
    xfaces: np.ndarray
    yfaces: np.ndarray

    def __post_init__(self):
        self.xfaces = np.asarray(self.xfaces, dtype=float)
        self.yfaces = np.asarray(self.yfaces, dtype=float)
        g = self.grid
        if self.xfaces.shape != (g.ny, g.nx + 1) or self.yfaces.shape != (g.ny + 1, g.nx):
            raise ValueError(
                f"face arrays {self.xfaces.shape}, {self.yfaces.shape} do not match "
                f"grid {g.nx}x{g.ny}")
        if not (np.all(np.isfinite(self.xfaces)) and np.all(np.isfinite(self.yfaces))):
            raise ValueError("face field contains non-finite values")


def _padded(u: ScalarField) -> np.ndarray:
    """Node matrix framed with the zero Dirichlet ghosts."""
    g = u.grid
    p = np.zeros((g.ny + 2, g.nx + 2))
    p[1:-1, 1:-1] = u.mat
    return p


def gradient(u: ScalarField) -> FaceField:
    """Forward differences onto faces; boundary faces difference against ghost 0."""
    g = u.grid
    p = _padded(u)
    xf = (p[1:-1, 1:] - p[1:-1, :-1]) / g.hx
    yf = (p[1:, 1:-1] - p[:-1, 1:-1]) / g.hy
    return FaceField(g, xf, yf)


def divergence(F: FaceField) -> ScalarField:
    """Per-node flux balance (F.x_right - F.x_left)/hx + (F.y_top - F.y_bottom)/hy."""
    g = F.grid
    vals = (F.xfaces[:, 1:] - F.xfaces[:, :-1]) / g.hx \
        + (F.yfaces[1:, :] - F.yfaces[:-1, :]) / g.hy
    return ScalarField(g, vals.reshape(-1))


def laplacian(u: ScalarField) -> ScalarField:
    """Five-point Laplacian, identically divergence(gradient(u))."""
    return divergence(gradient(u))


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature hx*hy*sum over interior nodes."""
    return f.grid.cell_area * float(f.values.sum())


def grad_norm_sq(u: ScalarField) -> float:
    """The nonlocal scalar: face-based discrete value of the integral of |grad u|^2.

    This is the single definition of the gradient energy used throughout the
    package (fixed-point map, eigenfunction normalization, energy bounds).
    """
    F = gradient(u)
    return u.grid.cell_area * float((F.xfaces ** 2).sum() + (F.yfaces ** 2).sum())


def grad_inner(u: ScalarField, v: ScalarField) -> float:
    """Face-based discrete value of the integral of grad u . grad v."""
    Fu, Fv = gradient(u), gradient(v)
    return u.grid.cell_area * float((Fu.xfaces * Fv.xfaces).sum() + (Fu.yfaces * Fv.yfaces).sum())


def node_gradient(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Gradient components averaged from faces back to nodes, shaped (ny, nx).

    Uses the ghost-zero boundary faces, so this is only meaningful for fields
    that actually vanish on the boundary (Dirichlet fields).
    """
    F = gradient(u)
    gx = 0.5 * (F.xfaces[:, :-1] + F.xfaces[:, 1:])
    gy = 0.5 * (F.yfaces[:-1, :] + F.yfaces[1:, :])
    return gx, gy


def node_grad_sq(u: ScalarField) -> ScalarField:
    """Four-face average of the squared face gradients, as a node field.

    Boundary faces difference against the zero ghosts; for coefficient-like
    fields (nonzero up to the boundary) the one-node collar next to the
    boundary is therefore polluted and callers must exclude it.
    """
    F = gradient(u)
    gx2 = 0.5 * (F.xfaces[:, :-1] ** 2 + F.xfaces[:, 1:] ** 2)
    gy2 = 0.5 * (F.yfaces[:-1, :] ** 2 + F.yfaces[1:, :] ** 2)
    return ScalarField(u.grid, (gx2 + gy2).reshape(-1))


def coeff_node_gradient(c: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Node-averaged gradient of a coefficient field, interior faces only.

    Coefficients do not vanish on the boundary, so the ghost-zero boundary
    faces are skipped: collar nodes average the single adjacent interior face
    (one-sided); an axis with a single node column has no information and
    contributes 0.
    """
    g = c.grid
    U = c.mat
    gx = np.zeros((g.ny, g.nx))
    if g.nx > 1:
        xi = (U[:, 1:] - U[:, :-1]) / g.hx
        gx[:, 0] = xi[:, 0]
        gx[:, -1] = xi[:, -1]
        if g.nx > 2:
            gx[:, 1:-1] = 0.5 * (xi[:, :-1] + xi[:, 1:])
    gy = np.zeros((g.ny, g.nx))
    if g.ny > 1:
        yi = (U[1:, :] - U[:-1, :]) / g.hy
        gy[0, :] = yi[0, :]
        gy[-1, :] = yi[-1, :]
        if g.ny > 2:
            gy[1:-1, :] = 0.5 * (yi[:-1, :] + yi[1:, :])
    return gx, gy


def coeff_grad_inf(c: ScalarField) -> float:
    """Max node-averaged gradient magnitude of a coefficient field."""
    gx, gy = coeff_node_gradient(c)
    return float(np.hypot(gx, gy).max())


def face_average(c: ScalarField) -> FaceField:
    """Coefficient values on faces: arithmetic mean of the two adjacent nodes,
    the bare interior node value on boundary faces."""
    g = c.grid
    U = c.mat
    cfx = np.empty((g.ny, g.nx + 1))
    cfx[:, 1:-1] = 0.5 * (U[:, :-1] + U[:, 1:])
    cfx[:, 0] = U[:, 0]
    cfx[:, -1] = U[:, -1]
    cfy = np.empty((g.ny + 1, g.nx))
    cfy[1:-1, :] = 0.5 * (U[:-1, :] + U[1:, :])
    cfy[0, :] = U[0, :]
    cfy[-1, :] = U[-1, :]
    return FaceField(g, cfx, cfy)


def dirichlet_lambda1(grid: Grid) -> float:
    """Smallest eigenvalue of the five-point Dirichlet Laplacian on the rectangle.

    Analytic on tensor grids: (4/hx^2) sin^2(pi hx / (2 Lx)) + same in y.
    """
    sx = math.sin(math.pi * grid.hx / (2.0 * grid.lx))
    sy = math.sin(math.pi * grid.hy / (2.0 * grid.ly))
    return 4.0 / grid.hx ** 2 * sx * sx + 4.0 / grid.hy ** 2 * sy * sy


# --- field file I/O -------------------------------------------------------
#
# Line 1:  # field nx ny x0 y0 hx hy
# then nx*ny whitespace-separated values, row-major, x fastest.

def write_field(f: ScalarField, path) -> None:
    g = f.grid
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# field {g.nx} {g.ny} {g.x0:.17g} {g.y0:.17g} {g.hx:.17g} {g.hy:.17g}\n")
        for row in f.mat:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_field(path) -> ScalarField:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        parts = header.split()
        if parts[:2] != ["#", "field"] or len(parts) != 8:
            raise ValueError(f"{path}: malformed field header: {header.strip()!r}")
        nx, ny = int(parts[2]), int(parts[3])
        x0, y0, hx, hy = (float(p) for p in parts[4:8])
        body = fh.read().split()
    grid = Grid(nx, ny, x0, y0, hx, hy)
    if len(body) != grid.n_nodes:
        raise ValueError(
            f"{path}: expected {grid.n_nodes} values for a {nx}x{ny} field, found {len(body)}")
    return ScalarField(grid, np.array([float(t) for t in body]))
