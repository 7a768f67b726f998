import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracfde.core import GridFunction, as_values, bump, make_grid, make_params, tent
from fracfde.errors import BadResolution, GridMismatch, OutOfRange, UnsupportedDim


def test_default_params_derived_fields():
    p = make_params(0.5, 0.25, 1)
    assert p.a == 0.5
    assert p.alpha == -1.0
    assert p.p == 2.0
    assert p.extinction_exp == 2.0
    assert p.smoothing_exp == pytest.approx(2.0, abs=1e-15)
    assert p.sobolev_valid
    assert p.sobolev_exp == pytest.approx(4.0)


def test_m_below_range_rejected():
    with pytest.raises(OutOfRange):
        make_params(0.3, 0.25, 1)


@pytest.mark.parametrize("m, sigma, dim", [(1.0, 0.25, 1), (0.5, 0.0, 1), (0.5, 1.0, 1), (float("nan"), 0.25, 1)])
def test_out_of_range(m, sigma, dim):
    with pytest.raises(OutOfRange):
        make_params(m, sigma, dim)


def test_unsupported_dim():
    with pytest.raises(UnsupportedDim):
        make_params(0.8, 0.25, 3)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.sampled_from([1, 2]))
def test_derived_fields_closed_form(m, sigma, dim):
    lower = (dim - 2 * sigma) / (dim + 2 * sigma)
    if not lower < m < 1:
        with pytest.raises(OutOfRange):
            make_params(m, sigma, dim)
        return
    p = make_params(m, sigma, dim)
    assert p.a == 1 - 2 * sigma and -1 < p.a < 1
    assert p.alpha == 1 - 1 / m and p.alpha < 0
    assert p.p == 1 / m and p.p > 1
    assert p.extinction_exp == 1 / (1 - m)
    assert p.sobolev_valid == (2 * sigma < dim)
    assert p.m_lower == pytest.approx(lower)


def test_small_grid_nodes():
    g = make_grid(1.0, 3, min_points=3)
    assert g.h == 0.5
    np.testing.assert_array_equal(g.axis, [-0.5, 0.0, 0.5])


def test_grid_255_spacing():
    g = make_grid(1.0, 255)
    assert g.h == 2 / 256
    assert g.axis[127] == 0.0


def test_grid_floor():
    with pytest.raises(BadResolution):
        make_grid(1.0, 7)
    with pytest.raises(BadResolution):
        make_grid(-1.0, 16)


def test_grid_nodes_inside_and_formula():
    g = make_grid(2.0, 100)
    assert np.all(np.abs(g.axis) < 2.0)
    i = np.arange(100)
    np.testing.assert_array_equal(g.axis, -2.0 + (i + 1.0) * g.h)


def test_2d_grid_points():
    g = make_grid(1.0, 8, 2)
    assert g.size == 64
    assert g.points.shape == (64, 2)
    assert g.cell_volume == pytest.approx(g.h**2)


def test_grid_function_checks():
    g = make_grid(1.0, 16)
    with pytest.raises(GridMismatch):
        GridFunction(g, np.zeros(15))
    with pytest.raises(ValueError):
        GridFunction(g, np.full(16, np.inf))
    f = GridFunction(g, np.ones(16))
    assert (f + 2 * f).values.sum() == 48
    other = GridFunction(make_grid(1.0, 17), np.ones(17))
    with pytest.raises(GridMismatch):
        f + other
    with pytest.raises(GridMismatch):
        as_values(np.ones(3), g)


def test_tent_and_bump_shapes():
    g = make_grid(1.0, 255)
    t = tent(g).values
    assert t.max() == 1.0 and t.min() == 0.0
    np.testing.assert_allclose(t, t[::-1])
    b = bump(g, 0.2, 0.3).values
    assert b[np.argmax(b)] == pytest.approx(1.0, abs=1e-3)
    assert np.all(b[np.abs(g.axis - 0.2) >= 0.3] == 0)
    assert math.isclose(tent(g).integral(), 0.5, rel_tol=1e-3)
