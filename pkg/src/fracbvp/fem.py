"""Piecewise linear finite elements for -u'' + f(x, u) = g + noise.

Galerkin discretization with hat functions on a uniform grid, homogeneous
Dirichlet data.  The noise load is computed exactly: the discretized noise
is constant on each of its cells, and a hat function integrates to half a
cell width over each cell it touches, so (noise, phi_j) reduces to averaged
increments.  Smooth loads use a two-point Gauss rule per cell (exact for the
products of linears that arise).  The nonlinear term is handled by the same
damped fixed-point iteration as the mild solver, preconditioned by the
stiffness matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import GridMismatchError, NonConvergenceError
from .grids import GridFunction, UniformGrid, discrete_h1_error, discrete_l2_error
from .greens import _GAUSS_OFFSETS, _gauss_points
from .noise import IncrementPath
from .problem import COERCIVITY, ProblemSpec

__all__ = [
    "FemSolution",
    "Tridiagonal",
    "assemble_load",
    "assemble_stiffness",
    "discrete_h1_error",
    "discrete_l2_error",
    "ritz_projection",
    "solve_linear_fem",
    "solve_nonlinear_fem",
]


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal system stored by bands (interior nodes only)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.lower * v[:-1]
        out[:-1] += self.upper * v[1:]
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        banded = np.zeros((3, len(self.diag)))
        banded[0, 1:] = self.upper
        banded[1, :] = self.diag
        banded[2, :-1] = self.lower
        return solve_banded((1, 1), banded, rhs)


def assemble_stiffness(grid: UniformGrid) -> Tridiagonal:
    """Stiffness matrix of -u'' on the interior nodes: tridiag(-1, 2, -1)/h."""
    if grid.n < 2:
        raise ValueError("need at least 2 cells for one interior node")
    m = grid.n - 1
    inv_h = 1.0 / grid.h
    return Tridiagonal(
        lower=-inv_h * np.ones(m - 1),
        diag=2.0 * inv_h * np.ones(m),
        upper=-inv_h * np.ones(m - 1),
    )


def _gauss_assemble(grid: UniformGrid, values_at_gauss: np.ndarray) -> np.ndarray:
    """Interior load vector (v, phi_j) from values at the per-cell Gauss points."""
    t_lo, t_hi = _GAUSS_OFFSETS
    w = 0.5 * grid.h
    lo, hi = values_at_gauss[0::2], values_at_gauss[1::2]
    to_left = w * ((1.0 - t_lo) * lo + (1.0 - t_hi) * hi)
    to_right = w * (t_lo * lo + t_hi * hi)
    load = np.zeros(grid.n + 1)
    np.add.at(load, np.arange(grid.n), to_left)
    np.add.at(load, np.arange(1, grid.n + 1), to_right)
    return load[1:-1]


def _noise_load(grid: UniformGrid, path: IncrementPath) -> np.ndarray:
    """Exact (noise, phi_j): averaged increments of the two touching cells.

    The noise may live on the FEM grid or on any coarser grid that divides
    it; the density is constant on every FEM cell either way.
    """
    if path.grid.n == grid.n:
        inc = path.increments
    elif path.grid.divides(grid):
        factor = grid.n // path.grid.n
        # each FEM cell inherits a share of its parent's increment
        inc = np.repeat(path.increments / factor, factor)
    else:
        raise GridMismatchError(
            f"noise on {path.grid.n} cells does not divide the FEM grid "
            f"with {grid.n} cells"
        )
    return 0.5 * (inc[:-1] + inc[1:])


def assemble_load(grid: UniformGrid, forcing=None, path: IncrementPath = None) -> np.ndarray:
    """Interior load vector (g, phi_j) + (noise, phi_j).

    Args:
        grid: FEM grid.
        forcing: vectorized callable or GridFunction, or None.
        path: noise increments on the FEM grid or a coarser divisor, or None.

    Returns:
        Array of length n-1.
    """
    load = np.zeros(grid.n - 1)
    if forcing is not None:
        values = np.asarray(forcing(_gauss_points(grid)), dtype=float)
        load = load + _gauss_assemble(grid, values)
    if path is not None:
        load = load + _noise_load(grid, path)
    return load


@dataclass(frozen=True)
class FemSolution:
    """Galerkin solution; values at interior nodes plus zero boundary data."""

    grid: UniformGrid
    interior: np.ndarray
    residual: float
    iterations: int

    @property
    def nodal_values(self) -> np.ndarray:
        return np.concatenate([[0.0], self.interior, [0.0]])

    @property
    def grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.nodal_values, kind="nodal")


def _residual_norm(grid: UniformGrid, defect: np.ndarray) -> float:
    """Discrete L2 norm of the load-vector defect, scaled like a density."""
    return math.sqrt(float(np.dot(defect, defect)) / grid.h)


def solve_linear_fem(grid: UniformGrid, load: np.ndarray) -> FemSolution:
    """Direct banded solve of the linear problem -u'' = load functional."""
    stiffness = assemble_stiffness(grid)
    interior = stiffness.solve(np.asarray(load, dtype=float))
    if not np.all(np.isfinite(interior)):
        raise FloatingPointError("banded solve produced non-finite values")
    defect = load - stiffness.matvec(interior)
    return FemSolution(grid, interior, _residual_norm(grid, defect), 0)


def solve_nonlinear_fem(problem: ProblemSpec, path: IncrementPath = None,
                        grid: UniformGrid = None, tol: float = 1e-10,
                        max_iters: int = 500) -> FemSolution:
    """Galerkin solution of -u'' + f(x, u) = g + noise.

    Damped stiffness-preconditioned fixed point: each step solves the linear
    problem with the current reaction load and relaxes by
    theta = min(1, 2/(2 + L)).  For f = 0 the first step is the exact linear
    solve and the loop exits with iterations = 1.

    Args:
        problem: Hurst index, reaction, forcing.
        path: noise increments; None solves the deterministic problem.
        grid: FEM mesh; defaults to the path's grid, and may be any
            refinement of it (the noise stays constant on its own cells).
        tol: tolerance on the discrete residual norm.
        max_iters: cap; NonConvergenceError beyond it.
    """
    if path is None and grid is None:
        raise ValueError("need either a noise path or a grid")
    if grid is None:
        grid = path.grid
    stiffness = assemble_stiffness(grid)
    load = assemble_load(grid, forcing=problem.forcing, path=path)
    theta = min(1.0, COERCIVITY / (COERCIVITY + problem.reaction.damping_constant))
    gauss = _gauss_points(grid)
    t_lo, t_hi = _GAUSS_OFFSETS

    def reaction_load(interior: np.ndarray) -> np.ndarray:
        u = np.concatenate([[0.0], interior, [0.0]])
        at_gauss = np.empty(2 * grid.n)
        at_gauss[0::2] = (1.0 - t_lo) * u[:-1] + t_lo * u[1:]
        at_gauss[1::2] = (1.0 - t_hi) * u[:-1] + t_hi * u[1:]
        return _gauss_assemble(grid, problem.reaction(gauss, at_gauss))

    u = np.zeros(grid.n - 1)
    residual = math.inf
    for iteration in range(max_iters + 1):
        defect = load - stiffness.matvec(u) - reaction_load(u)
        residual = _residual_norm(grid, defect)
        if residual <= tol:
            return FemSolution(grid, u, residual, iteration)
        if iteration < max_iters:
            u = u + theta * stiffness.solve(defect)
    raise NonConvergenceError(
        f"FEM fixed-point iteration stalled at residual {residual:.3e} "
        f"after {max_iters} iterations",
        residual=residual,
        iterations=max_iters,
    )


def ritz_projection(w, grid: UniformGrid) -> GridFunction:
    """Ritz projection of w onto the hat-function space.

    The right-hand side (w', phi_j') collapses to exact nodal differences
    (2 w(x_j) - w(x_{j-1}) - w(x_{j+1}))/h, so in one dimension the
    projection coincides with nodal interpolation; the banded solve is kept
    as the defining computation.

    Args:
        w: callable or GridFunction, absolutely continuous on [0, 1].
        grid: target FEM grid.
    """
    values = np.asarray(w(grid.nodes()), dtype=float)
    rhs = (2.0 * values[1:-1] - values[:-2] - values[2:]) / grid.h
    interior = assemble_stiffness(grid).solve(rhs)
    return GridFunction(grid, np.concatenate([[0.0], interior, [0.0]]), kind="nodal")
