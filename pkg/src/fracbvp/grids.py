"""Uniform grids on [0, 1] and exact norms of piecewise polynomial functions.

Everything downstream (noise paths, both solvers, the convergence harness)
shares these two types.  Grid functions are either piecewise linear in the
nodal values ("nodal") or piecewise constant on the cells ("cell"); norms and
errors are computed exactly for those classes, never by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UniformGrid",
    "GridFunction",
    "discrete_l2_error",
    "discrete_h1_error",
]


@dataclass(frozen=True)
class UniformGrid:
    """Uniform partition of [0, 1] into n cells of width h = 1/n."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"cell count must be an integer, got {self.n!r}")
        if self.n < 1:
            raise ValueError(f"cell count must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def nodes(self) -> np.ndarray:
        """All n+1 nodes including both endpoints; exact 0.0 and 1.0 ends."""
        return np.linspace(0.0, 1.0, self.n + 1)

    def midpoints(self) -> np.ndarray:
        nodes = self.nodes()
        return 0.5 * (nodes[:-1] + nodes[1:])

    def refine(self, factor: int) -> "UniformGrid":
        if factor < 1:
            raise ValueError(f"refinement factor must be >= 1, got {factor}")
        return UniformGrid(self.n * factor)

    def divides(self, finer: "UniformGrid") -> bool:
        """True if every cell of this grid is a union of cells of `finer`."""
        return finer.n % self.n == 0


@dataclass(frozen=True)
class GridFunction:
    """Piecewise polynomial function attached to a uniform grid.

    kind "nodal": piecewise linear, `values` holds the n+1 nodal values.
    kind "cell": piecewise constant, `values` holds the n cell values, with
    the convention that cell i covers (x_i, x_{i+1}] and the value at x=0 is
    the first cell's.
    """

    grid: UniformGrid
    values: np.ndarray
    kind: str = "nodal"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = self.grid.n + 1 if self.kind == "nodal" else self.grid.n
        if self.kind not in ("nodal", "cell"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if values.shape != (expected,):
            raise ValueError(
                f"{self.kind} function on {self.grid.n} cells needs "
                f"{expected} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: UniformGrid, fn, kind: str = "nodal") -> "GridFunction":
        points = grid.nodes() if kind == "nodal" else grid.midpoints()
        return cls(grid, np.asarray(fn(points), dtype=float), kind)

    @classmethod
    def zeros(cls, grid: UniformGrid, kind: str = "nodal") -> "GridFunction":
        size = grid.n + 1 if kind == "nodal" else grid.n
        return cls(grid, np.zeros(size), kind)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("evaluation points must lie in [0, 1]")
        if self.kind == "nodal":
            return np.interp(x, self.grid.nodes(), self.values)
        idx = np.clip(np.ceil(x * self.grid.n).astype(int) - 1, 0, self.grid.n - 1)
        return self.values[idx]

    def l2_norm(self) -> float:
        """Exact L2 norm of the piecewise polynomial."""
        h, v = self.grid.h, self.values
        if self.kind == "cell":
            return math.sqrt(h * float(np.dot(v, v)))
        # int of a linear segment squared: h/3 (a^2 + a b + b^2)
        a, b = v[:-1], v[1:]
        return math.sqrt(h / 3.0 * float(np.sum(a * a + a * b + b * b)))

    def h1_seminorm(self) -> float:
        """Exact L2 norm of the derivative; defined for the nodal kind only."""
        if self.kind != "nodal":
            raise ValueError("piecewise constant functions have no H1 seminorm")
        dv = np.diff(self.values)
        return math.sqrt(float(np.dot(dv, dv)) / self.grid.h)

    def h1_norm(self) -> float:
        return math.sqrt(self.l2_norm() ** 2 + self.h1_seminorm() ** 2)


def _segment_samples(f: GridFunction, fine: UniformGrid):
    """Left/mid/right values of f on each cell of `fine` (one-sided at jumps).

    Requires f's grid to divide `fine`, so f is a polynomial on every fine
    cell and cellwise Simpson on the difference of two such functions is
    exact.
    """
    if not f.grid.divides(fine):
        raise ValueError(
            f"grid with {f.grid.n} cells does not divide the common "
            f"refinement with {fine.n} cells"
        )
    if f.kind == "cell":
        parent = np.arange(fine.n) // (fine.n // f.grid.n)
        vals = f.values[parent]
        return vals, vals, vals
    nodes = fine.nodes()
    left = np.interp(nodes[:-1], f.grid.nodes(), f.values)
    right = np.interp(nodes[1:], f.grid.nodes(), f.values)
    mid = np.interp(fine.midpoints(), f.grid.nodes(), f.values)
    return left, mid, right


def discrete_l2_error(f: GridFunction, g: GridFunction) -> float:
    """Exact L2 distance between two grid functions.

    The grids need not match; the difference is integrated on the least
    common refinement, where it is polynomial of degree <= 1 per cell and
    cellwise Simpson is exact.
    """
    fine = UniformGrid(math.lcm(f.grid.n, g.grid.n))
    fl, fm, fr = _segment_samples(f, fine)
    gl, gm, gr = _segment_samples(g, fine)
    dl, dm, dr = fl - gl, fm - gm, fr - gr
    total = fine.h / 6.0 * float(np.sum(dl * dl + 4.0 * dm * dm + dr * dr))
    return math.sqrt(max(total, 0.0))


def discrete_h1_error(f: GridFunction, g: GridFunction) -> float:
    """Exact L2 distance between the derivatives of two nodal grid functions."""
    if f.kind != "nodal" or g.kind != "nodal":
        raise ValueError("H1 distance requires nodal (piecewise linear) functions")
    fine = UniformGrid(math.lcm(f.grid.n, g.grid.n))
    slopes = []
    for fn in (f, g):
        factor = fine.n // fn.grid.n
        s = np.repeat(np.diff(fn.values) / fn.grid.h, factor)
        slopes.append(s)
    ds = slopes[0] - slopes[1]
    return math.sqrt(fine.h * float(np.dot(ds, ds)))
