"""Grid and norm plumbing: everything here must be exact, not approximate."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fracbvp import GridFunction, UniformGrid, discrete_h1_error, discrete_l2_error


class TestUniformGrid:
    def test_basic_geometry(self):
        grid = UniformGrid(4)
        assert grid.h == 0.25
        assert np.allclose(grid.nodes(), [0.0, 0.25, 0.5, 0.75, 1.0])
        assert grid.nodes()[0] == 0.0 and grid.nodes()[-1] == 1.0
        assert np.allclose(grid.midpoints(), [0.125, 0.375, 0.625, 0.875])

    def test_validation(self):
        with pytest.raises(ValueError):
            UniformGrid(0)
        with pytest.raises(TypeError):
            UniformGrid(2.5)

    def test_divides(self):
        assert UniformGrid(4).divides(UniformGrid(12))
        assert not UniformGrid(4).divides(UniformGrid(6))


class TestGridFunction:
    def test_shape_validation(self):
        grid = UniformGrid(3)
        with pytest.raises(ValueError):
            GridFunction(grid, np.zeros(3), kind="nodal")
        with pytest.raises(ValueError):
            GridFunction(grid, np.zeros(4), kind="cell")

    def test_nodal_evaluation_is_linear_interpolation(self):
        grid = UniformGrid(4)
        f = GridFunction(grid, np.array([0.0, 1.0, 0.0, 2.0, 0.0]))
        assert f(0.125) == pytest.approx(0.5)
        assert f(0.625) == pytest.approx(1.0)

    def test_cell_evaluation_half_open_convention(self):
        grid = UniformGrid(4)
        f = GridFunction(grid, np.array([1.0, 2.0, 3.0, 4.0]), kind="cell")
        # cell i covers (x_i, x_{i+1}]
        assert f(0.25) == 1.0
        assert f(0.2500001) == 2.0
        assert f(1.0) == 4.0
        assert f(0.0) == 1.0

    def test_l2_norm_nodal_exact(self):
        # hat function on [0,1] with peak 1 at x=1/2: ||f||^2 = 1/6... compute:
        # int_0^{1/2} (2x)^2 = 4/3 * 1/8 = 1/6; symmetric -> total 1/3
        grid = UniformGrid(2)
        f = GridFunction(grid, np.array([0.0, 1.0, 0.0]))
        assert f.l2_norm() == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-15)

    def test_h1_seminorm_exact(self):
        grid = UniformGrid(2)
        f = GridFunction(grid, np.array([0.0, 1.0, 0.0]))
        # slope +-2 on halves: int (f')^2 = 4
        assert f.h1_seminorm() == pytest.approx(2.0, abs=1e-15)

    def test_cell_norm(self):
        grid = UniformGrid(4)
        f = GridFunction(grid, np.array([1.0, -1.0, 2.0, 0.0]), kind="cell")
        assert f.l2_norm() == pytest.approx(math.sqrt(0.25 * 6.0), abs=1e-15)
        with pytest.raises(ValueError):
            f.h1_seminorm()

    @given(values=st.lists(st.floats(-10, 10), min_size=3, max_size=9))
    @settings(max_examples=25, deadline=None)
    def test_l2_norm_matches_quadrature(self, values):
        grid = UniformGrid(len(values) - 1)
        f = GridFunction(grid, np.array(values))
        # tell the quadrature where the kinks sit, or it can miss narrow ones
        expected, _ = integrate.quad(lambda x: float(f(x)) ** 2, 0, 1,
                                     limit=200, epsabs=1e-13,
                                     points=list(grid.nodes()[1:-1]))
        assert f.l2_norm() ** 2 == pytest.approx(expected, abs=1e-9)


class TestErrors:
    def test_l2_error_between_different_grids(self):
        # f = x on 2 cells, g = x on 3 cells: identical functions, zero error
        f = GridFunction.from_callable(UniformGrid(2), lambda x: x)
        g = GridFunction.from_callable(UniformGrid(3), lambda x: x)
        assert discrete_l2_error(f, g) == pytest.approx(0.0, abs=1e-15)

    def test_l2_error_nodal_vs_cell(self):
        # pw-linear x minus constant 1/2 on one cell: int (x - 1/2)^2 = 1/12
        f = GridFunction.from_callable(UniformGrid(2), lambda x: x)
        g = GridFunction(UniformGrid(1), np.array([0.5]), kind="cell")
        assert discrete_l2_error(f, g) == pytest.approx(math.sqrt(1.0 / 12.0), abs=1e-15)

    def test_l2_error_against_quadrature(self, rng):
        f = GridFunction(UniformGrid(4), rng.normal(size=5))
        g = GridFunction(UniformGrid(6), rng.normal(size=7))
        expected, _ = integrate.quad(lambda x: (float(f(x)) - float(g(x))) ** 2,
                                     0, 1, limit=200, epsabs=1e-13)
        assert discrete_l2_error(f, g) ** 2 == pytest.approx(expected, rel=1e-10)

    def test_h1_error_exact(self, rng):
        f = GridFunction(UniformGrid(4), rng.normal(size=5))
        g = GridFunction(UniformGrid(8), rng.normal(size=9))
        fine = UniformGrid(8)
        fs = np.repeat(np.diff(f.values) / f.grid.h, 2)
        gs = np.diff(g.values) / g.grid.h
        expected = math.sqrt(fine.h * np.sum((fs - gs) ** 2))
        assert discrete_h1_error(f, g) == pytest.approx(expected, abs=1e-14)

    def test_h1_error_rejects_cell_functions(self):
        f = GridFunction(UniformGrid(2), np.zeros(2), kind="cell")
        g = GridFunction(UniformGrid(2), np.zeros(3))
        with pytest.raises(ValueError):
            discrete_h1_error(f, g)
