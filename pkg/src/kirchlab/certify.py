"""Uniqueness certificates for the nonlocal problem from the ratio c = a/b.

Three sufficient conditions are checked in order of strength:

  1. c is constant                          -> UniqueConstantRatio
  2. Lap c >= 2|grad c|^2 / c everywhere    -> UniquePointwise
  3. |grad c|_inf c_max / (sqrt(lambda1) c_min^2) <= 3/2
                                            -> UniqueRatioBound

Any verdict other than Inconclusive certifies a unique solution for every
forcing term; the three measured quantities are reported regardless of the
verdict.  The pointwise field uses the ghost-zero Laplacian, so its one-node
boundary collar is excluded from the reported minimum (stated in details).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (Grid, ScalarField, coeff_grad_inf, dirichlet_lambda1,
                   laplacian, node_grad_sq, node_gradient)
from .linalg import assemble_weighted_laplacian, cg_solve

CONSTANT_RTOL = 1e-10
POINTWISE_TOL = 1e-8
RATIO_LIMIT = 1.5
CONSTRUCTION_TOL = 1e-6


class NonPositiveC(Exception):
    pass


class GridMismatch(Exception):
    pass


class NonPositiveCoefficient(Exception):
    pass


class ConstructionFailed(Exception):
    def __init__(self, message: str, min_c: float, min_d: float):
        super().__init__(message)
        self.min_c = min_c
        self.min_d = min_d


@dataclass
class Certificate:
    verdict: str          # UniqueConstantRatio | UniquePointwise | UniqueRatioBound | Inconclusive
    ratio_value: float
    min_d: float
    theta: float | None
    lambda1: float
    grid: Grid
    details: str

    def to_json_dict(self) -> dict:
        g = self.grid
        return {
            "verdict": self.verdict,
            "ratio_value": self.ratio_value,
            "min_D": self.min_d,
            "theta": self.theta,
            "lambda1": self.lambda1,
            "grid": f"{g.nx} {g.ny} {g.x0:.17g} {g.y0:.17g} {g.hx:.17g} {g.hy:.17g}",
            "details": self.details,
        }


def pointwise_criterion(c: ScalarField) -> ScalarField:
    """The field D = Lap c - 2 |grad c|^2 / c at every node.

    Lap uses the zero ghosts, so values on the one-node boundary collar are
    meaningless for coefficients; interior_min reports the honest region.
    """
    if float(c.values.min()) <= 0.0:
        raise NonPositiveC(f"ratio field must be positive, min = {c.values.min():.6g}")
    lap = laplacian(c)
    gsq = node_grad_sq(c)
    return ScalarField(c.grid, lap.values - 2.0 * gsq.values / c.values)


def interior_min(f: ScalarField) -> float:
    """Minimum over nodes excluding the one-node boundary collar.

    Falls back to the full minimum when the grid is too thin to have a
    collar-free interior.
    """
    g = f.grid
    if g.nx >= 3 and g.ny >= 3:
        return float(f.mat[1:-1, 1:-1].min())
    return float(f.values.min())


def ratio_criterion(c: ScalarField) -> float:
    """|grad c|_inf * c_max / (sqrt(lambda1) * c_min^2); 0 for constant c."""
    if float(c.values.min()) <= 0.0:
        raise NonPositiveC(f"ratio field must be positive, min = {c.values.min():.6g}")
    grad_inf = coeff_grad_inf(c)
    c_lo = float(c.values.min())
    c_hi = float(c.values.max())
    return grad_inf * c_hi / (math.sqrt(dirichlet_lambda1(c.grid)) * c_lo ** 2)


def ratio_gap(c: ScalarField, alpha: float) -> float:
    """|grad c|_inf (c_max+alpha) / (sqrt(lambda1) (c_min+alpha)^2) - 1.

    Strictly decreasing in alpha and equal to ratio_criterion - 1 at alpha=0;
    a negative value at the energy of a candidate solution rules out a
    degenerate Jacobian there.
    """
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha:.6g}")
    if float(c.values.min()) <= 0.0:
        raise NonPositiveC(f"ratio field must be positive, min = {c.values.min():.6g}")
    grad_inf = coeff_grad_inf(c)
    c_lo = float(c.values.min())
    c_hi = float(c.values.max())
    lam1 = dirichlet_lambda1(c.grid)
    return grad_inf * (c_hi + alpha) / (math.sqrt(lam1) * (c_lo + alpha) ** 2) - 1.0


def certify(a: ScalarField, b: ScalarField) -> Certificate:
    """Run the three uniqueness tests on c = a/b, strongest first."""
    if a.grid != b.grid:
        raise GridMismatch("a and b live on different grids")
    if float(a.values.min()) <= 0.0 or float(b.values.min()) <= 0.0:
        raise NonPositiveCoefficient(
            f"coefficients must be positive: min a = {a.values.min():.6g}, "
            f"min b = {b.values.min():.6g}")

    c = ScalarField(a.grid, a.values / b.values)
    c_lo = float(c.values.min())
    c_hi = float(c.values.max())
    c_mean = float(c.values.mean())
    lam1 = dirichlet_lambda1(a.grid)
    ratio = ratio_criterion(c)
    min_d = interior_min(pointwise_criterion(c))

    base_note = ("min_D measured with the one-node boundary collar excluded; "
                 "pointwise and ratio tests are independent of the forcing term.")

    if c_hi - c_lo <= CONSTANT_RTOL * c_mean:
        return Certificate("UniqueConstantRatio", ratio, min_d, c_mean, lam1, a.grid,
                           f"a/b constant to relative variation "
                           f"{(c_hi - c_lo) / c_mean:.3e}; {base_note}")
    if min_d >= -POINTWISE_TOL:
        return Certificate("UniquePointwise", ratio, min_d, None, lam1, a.grid,
                           f"pointwise criterion min {min_d:.6g} >= -{POINTWISE_TOL:g}; "
                           f"{base_note}")
    if ratio <= RATIO_LIMIT:
        return Certificate("UniqueRatioBound", ratio, min_d, None, lam1, a.grid,
                           f"ratio {ratio:.6g} <= {RATIO_LIMIT:g}; {base_note}")
    return Certificate("Inconclusive", ratio, min_d, None, lam1, a.grid,
                       f"ratio {ratio:.6g} > {RATIO_LIMIT:g} and min_D {min_d:.6g} < "
                       f"-{POINTWISE_TOL:g}: no criterion applies; {base_note}")


def pointwise_certified_ratio(grid: Grid) -> ScalarField:
    """Construct a non-constant ratio field that passes the pointwise test.

    Solve Lap e = 1 with zero boundary (e is then negative inside), cap
    delta = min(1/(4 |grad e|_inf^2), 1/(2 |e|_inf)) and return c = delta*e + 1.
    The cap keeps c above 1/2 and makes Lap c dominate 2|grad c|^2/c; both
    facts are re-verified on the discrete field and a failure (grid too
    coarse) raises ConstructionFailed.
    """
    A = assemble_weighted_laplacian(ScalarField.full(grid, 1.0))
    e = ScalarField(grid, cg_solve(A, -np.ones(grid.n_nodes)))
    gx, gy = node_gradient(e)
    grad_inf = float(np.hypot(gx, gy).max())
    e_inf = float(np.abs(e.values).max())
    if grad_inf == 0.0 or e_inf == 0.0:
        raise ConstructionFailed("degenerate construction on this grid", 0.0, 0.0)
    delta = min(1.0 / (4.0 * grad_inf ** 2), 1.0 / (2.0 * e_inf))
    c = ScalarField(grid, delta * e.values + 1.0)

    min_c = float(c.values.min())
    min_d = interior_min(pointwise_criterion(c)) if min_c > 0.0 else -math.inf
    if min_c <= 0.0 or min_d < -CONSTRUCTION_TOL:
        raise ConstructionFailed(
            f"construction violates its own certificate: min c = {min_c:.6g}, "
            f"min D = {min_d:.6g} (grid too coarse)", min_c, min_d)
    return c
