import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chdyn.grid import GridSpec, build_grid, integrate_bulk, integrate_surface


def test_spacing_and_walls_2d():
    g = build_grid(dim=2, extents=(1, 1), cells=(8, 8), wall_axis=1)
    assert g.spacing == (0.125, 0.125)
    assert g.wall_position("low") == 0.0 and g.wall_position("high") == 1.0
    np.testing.assert_array_equal(g.normal("low"), [0.0, -1.0])
    np.testing.assert_array_equal(g.normal("high"), [0.0, 1.0])


def test_wall_lattice_3d():
    g = build_grid(dim=3, extents=(1, 1, 2), cells=(4, 4, 8), wall_axis=2)
    assert g.wall_shape == (4, 4)
    assert g.spacing == (0.25, 0.25, 0.25)


@pytest.mark.parametrize("kwargs", [
    dict(dim=2, extents=(1, 1), cells=(2, 2)),
    dict(dim=2, extents=(0, 1), cells=(8, 8)),
    dict(dim=2, extents=(-1, 1), cells=(8, 8)),
    dict(dim=4, extents=(1,) * 4, cells=(4,) * 4),
    dict(dim=2, extents=(1, 1), cells=(8, 8), wall_axis=2),
])
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_cell_centers_and_wall_adjacency():
    g = build_grid(dim=2, extents=(2, 1), cells=(4, 5), wall_axis=1)
    np.testing.assert_allclose(g.centers[0], [0.25, 0.75, 1.25, 1.75])
    f = np.arange(20.0).reshape(4, 5)
    np.testing.assert_array_equal(g.adjacent_layer(f, "low"), f[:, 0])
    np.testing.assert_array_equal(g.adjacent_layer(f, "high"), f[:, -1])
    np.testing.assert_array_equal(g.adjacent_layer(f, "high", 1), f[:, -2])
    x_wall = g.wall_mesh("high")[0]
    np.testing.assert_array_equal(x_wall, g.centers[0])


def test_integrals_of_constants():
    unit = build_grid(dim=2, extents=(1, 1), cells=(8, 8), wall_axis=1)
    assert integrate_bulk(np.ones(unit.shape), unit) == pytest.approx(1.0, abs=1e-15)
    box = build_grid(dim=2, extents=(1, 2), cells=(8, 16), wall_axis=1)
    assert integrate_bulk(np.full(box.shape, 3.0), box) == pytest.approx(6.0, abs=1e-14)
    assert integrate_surface(np.ones(unit.wall_shape), unit) == pytest.approx(1.0, abs=1e-15)
    assert integrate_surface(np.zeros(unit.wall_shape), unit) == 0.0


def test_periodic_trig_integrates_to_zero():
    g = build_grid(dim=2, extents=(1, 1), cells=(16, 16), wall_axis=1)
    x = g.mesh[0]
    assert abs(integrate_bulk(np.sin(2 * np.pi * x), g)) <= 1e-12
    xs = g.wall_mesh("low")[0]
    assert abs(integrate_surface(np.cos(2 * np.pi * xs), g)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2 ** 16))
def test_quadrature_is_linear(a, b, seed):
    g = build_grid(dim=3, extents=(1, 2, 0.5), cells=(4, 5, 6), wall_axis=0)
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=g.shape), rng.normal(size=g.shape)
    lhs = integrate_bulk(a * f + b * h, g)
    rhs = a * integrate_bulk(f, g) + b * integrate_bulk(h, g)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    fs, hs = rng.normal(size=g.wall_shape), rng.normal(size=g.wall_shape)
    assert integrate_surface(a * fs + b * hs, g) == pytest.approx(
        a * integrate_surface(fs, g) + b * integrate_surface(hs, g), abs=1e-12)


def test_shape_checks():
    g = build_grid(dim=2, extents=(1, 1), cells=(8, 8), wall_axis=1)
    with pytest.raises(ValueError):
        g.check_bulk(np.zeros((8, 7)))
    with pytest.raises(ValueError):
        g.check_surface(np.zeros(9))
