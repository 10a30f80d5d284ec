import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from chdyn import calculus
from chdyn.calculus import converges_at, observed_orders
from chdyn.grid import build_grid

TWO_PI = 2 * np.pi


def slab(n=32, dim=2):
    return build_grid(dim=dim, extents=(1.0,) * dim, cells=(n,) * dim, wall_axis=-1)


# -- bulk ------------------------------------------------------------------------

def test_gradient_of_constant_is_zero():
    g = slab()
    assert np.abs(calculus.gradient(np.full(g.shape, 2.5), g)).max() == 0.0


def test_gradient_of_periodic_sine():
    errs = []
    for n in (16, 32, 64):
        g = slab(n)
        x = g.mesh[0]
        errs.append(np.abs(calculus.gradient(np.sin(TWO_PI * x), g)[0]
                           - TWO_PI * np.cos(TWO_PI * x)).max())
    assert converges_at(errs, 1.9)


def test_gradient_exact_on_linear_wall_profile():
    g = slab()
    z = g.mesh[1]
    grad = calculus.gradient(z, g)
    np.testing.assert_allclose(grad[1], 1.0, atol=1e-12)
    np.testing.assert_allclose(grad[0], 0.0, atol=1e-12)


def test_laplacian_examples():
    g = slab()
    x, z = g.mesh
    assert np.abs(calculus.laplacian(np.full(g.shape, 1.7), g)).max() <= 1e-10
    errs = []
    for n in (16, 32, 64):
        gn = slab(n)
        xn = gn.mesh[0]
        lap = calculus.laplacian(np.sin(TWO_PI * xn), gn)
        errs.append(np.abs(lap + TWO_PI ** 2 * np.sin(TWO_PI * xn)).max())
    assert converges_at(errs, 1.9)
    np.testing.assert_allclose(calculus.laplacian(z ** 2, g)[:, 1:-1], 2.0, atol=1e-10)


def test_laplacian_with_supplied_ghosts_uses_them():
    g = slab(8)
    f = np.zeros(g.shape)
    ghosts = {"low": np.ones(g.wall_shape), "high": np.zeros(g.wall_shape)}
    lap = calculus.laplacian(f, g, ghosts)
    h = g.spacing[1]
    np.testing.assert_allclose(lap[:, 0], 1.0 / h ** 2)
    np.testing.assert_allclose(lap[:, 1:], 0.0)


def test_normal_derivative_examples():
    g = slab()
    z = g.mesh[1]
    assert np.abs(calculus.normal_derivative(np.full(g.shape, 3.0), g, "low")).max() == 0.0
    np.testing.assert_allclose(calculus.normal_derivative(z, g, "low"), -1.0, atol=1e-12)
    np.testing.assert_allclose(calculus.normal_derivative(z, g, "high"), 1.0, atol=1e-12)


# -- flat walls --------------------------------------------------------------------

def test_flat_surface_operators():
    g = slab(64)
    xs = g.wall_mesh("low")[0]
    assert np.abs(calculus.surface_gradient(np.full(g.wall_shape, 4.0), g)).max() == 0.0
    grad = calculus.surface_gradient(np.cos(TWO_PI * xs), g)
    assert np.abs(grad[0] + TWO_PI * np.sin(TWO_PI * xs)).max() < 0.02
    assert np.all(grad[1] == 0.0)          # tangency: no wall-normal component
    v = np.zeros((2,) + g.wall_shape)
    v[0] = 0.7
    assert np.abs(calculus.surface_divergence(v, g)).max() == 0.0
    v[0] = np.sin(TWO_PI * xs)
    assert np.abs(calculus.surface_divergence(v, g) - TWO_PI * np.cos(TWO_PI * xs)).max() < 0.02
    lb = calculus.laplace_beltrami(np.cos(TWO_PI * xs), g)
    assert np.abs(lb + TWO_PI ** 2 * np.cos(TWO_PI * xs)).max() < 0.04
    assert np.abs(calculus.laplace_beltrami(np.full(g.wall_shape, 1.0), g)).max() == 0.0
    np.testing.assert_array_equal(calculus.mean_curvature(g), 0.0)


def test_flat_surface_gradient_3d_is_tangent():
    g = slab(8, dim=3)
    fs = np.random.default_rng(0).normal(size=g.wall_shape)
    grad = calculus.surface_gradient(fs, g)
    assert grad.shape == (3,) + g.wall_shape
    assert np.all(grad[g.wall_axis] == 0.0)


# -- patches -------------------------------------------------------------------------

@pytest.mark.parametrize("make", [
    lambda: calculus.plane_patch(8),
    lambda: calculus.sphere_patch(12, radius=1.5),
    lambda: calculus.cube_face(1, 0, 6),
])
def test_projector_algebra(make):
    patch = make()
    P = patch.projector()
    np.testing.assert_allclose(np.linalg.norm(patch.normal, axis=-1), 1.0, atol=1e-14)
    np.testing.assert_allclose(P @ P, P, atol=1e-14)
    np.testing.assert_allclose(P, np.swapaxes(P, -1, -2), atol=0)
    np.testing.assert_allclose(np.einsum("...ij,...j", P, patch.normal), 0.0, atol=1e-14)


def _band(patch, margin=0.6):
    th = np.broadcast_to(patch.params[0][:, None], patch.shape)
    return np.abs(th - np.pi / 2) <= np.pi / 2 - margin


def test_sphere_gradient_of_height():
    errs = []
    for n in (16, 32, 64):
        patch = calculus.sphere_patch(n)
        z = patch.position[..., 2]
        exact = np.einsum("...ij,j", patch.projector(), [0.0, 0.0, 1.0])
        grad = calculus.surface_gradient(z, patch)
        errs.append(np.abs(grad - exact).max())
        # tangency to discretization accuracy
        assert np.abs(np.einsum("...i,...i", grad, patch.normal)).max() <= 10 * errs[-1]
    assert converges_at(errs, 1.9)


def test_sphere_divergence_and_laplace_beltrami():
    div_err, lb_err = [], []
    for n in (16, 32, 64):
        patch = calculus.sphere_patch(n)
        z = patch.position[..., 2]
        band = _band(patch)
        div_err.append(np.abs(calculus.surface_divergence(patch.normal, patch) - 2.0)[band].max())
        lb_err.append(np.abs(calculus.laplace_beltrami(z, patch) + 2.0 * z)[band].max())
    assert converges_at(div_err, 1.9) and converges_at(lb_err, 1.9)


@pytest.mark.parametrize("radius,expected", [(1.0, -1.0), (2.0, -0.5)])
def test_sphere_mean_curvature(radius, expected):
    patch = calculus.sphere_patch(64, radius=radius)
    np.testing.assert_allclose(calculus.mean_curvature(patch), expected)
    discrete = calculus.mean_curvature(patch, discrete=True)
    assert np.abs(discrete - expected)[_band(patch)].max() < 2e-3


def test_plane_mean_curvature_zero():
    patch = calculus.plane_patch(8)
    np.testing.assert_allclose(calculus.mean_curvature(patch, discrete=True), 0.0, atol=1e-14)


# -- theorems ---------------------------------------------------------------------------

def test_closed_cube_constant_field_cancels():
    lhs, rhs = calculus.check_closed_surface_divergence(
        lambda p: np.broadcast_to([1.0, 2.0, -3.0], p.shape), calculus.unit_cube_edges(16))
    assert abs(lhs) <= 1e-10 and abs(rhs) <= 1e-10


def test_closed_cube_position_field():
    lhs, rhs = calculus.check_closed_surface_divergence(lambda p: p, calculus.unit_cube_edges(16))
    assert lhs == pytest.approx(12.0, abs=1e-11)
    assert rhs == pytest.approx(12.0, abs=1e-11)


def test_closed_cube_quadratic_field_against_symbolic_oracle():
    # Oracle: integrate both sides symbolically, face by face and edge by edge
    x, y, z = sp.symbols("x y z")
    X = (x, y, z)
    kappa = (x ** 2, 0, 0)
    lhs_exact = 0
    for axis in range(3):
        tangential = [a for a in range(3) if a != axis]
        for side in (0, 1):
            div = sum(sp.diff(kappa[a], X[a]) for a in tangential)
            div = div.subs(X[axis], side)
            lhs_exact += sp.integrate(div, (X[tangential[0]], 0, 1), (X[tangential[1]], 0, 1))
    rhs_exact = 0
    for axis in range(3):
        b, c = [a for a in range(3) if a != axis]
        for sb in (0, 1):
            for sc in (0, 1):
                sub = {X[b]: sb, X[c]: sc}
                jump = (1 if sc else -1) * kappa[c] + (1 if sb else -1) * kappa[b]
                rhs_exact += sp.integrate(sp.sympify(jump).subs(sub), (X[axis], 0, 1))
    assert lhs_exact == rhs_exact == 4
    field = lambda p: np.stack([p[..., 0] ** 2, 0 * p[..., 0], 0 * p[..., 0]], axis=-1)
    errs = []
    for n in (16, 32, 64):
        lhs, rhs = calculus.check_closed_surface_divergence(field, calculus.unit_cube_edges(n))
        assert rhs == pytest.approx(4.0, abs=1e-12)
        errs.append(abs(lhs - 4.0))
    assert max(errs) < 1e-10 or converges_at(errs, 1.9)


def test_open_face_divergence_theorem():
    def kappa(p):
        return np.stack([np.sin(p[..., 0] + p[..., 1]), p[..., 2] ** 2, np.cos(p[..., 0])], axis=-1)

    gaps = []
    for n in (64, 128, 256):
        lhs, rhs = calculus.check_open_surface_divergence(kappa, calculus.cube_face(2, 1, n))
        gaps.append(abs(lhs - rhs))
    assert converges_at(gaps, 1.9)


def test_curvature_split_plane_and_sphere():
    plane = calculus.plane_patch(16)
    rng = np.random.default_rng(1)
    v = np.zeros(plane.position.shape)
    v[..., :2] = rng.normal(size=plane.shape + (2,))
    np.testing.assert_allclose(calculus.check_curvature_split(plane, v), 0.0, atol=1e-12)
    sphere = calculus.sphere_patch(64)
    assert np.abs(calculus.check_curvature_split(sphere, sphere.normal)).max() <= 1e-10
    errs = []
    for n in (32, 64, 128):
        s = calculus.sphere_patch(n)
        ez = np.broadcast_to([0.0, 0.0, 1.0], s.position.shape)
        errs.append(np.abs(calculus.check_curvature_split(s, ez)).max())
    assert converges_at(errs, 1.9)


def test_observed_orders_and_floor():
    assert observed_orders([4.0, 1.0, 0.25]) == pytest.approx([2.0, 2.0])
    assert converges_at([1e-15, 2e-15, 1e-15], 1.9)
    assert not converges_at([1.0, 0.5], 1.9)


@settings(max_examples=25, deadline=None)
@given(shift=st.integers(1, 15), seed=st.integers(0, 1000))
def test_laplacian_commutes_with_periodic_shift(shift, seed):
    g = slab(16)
    f = np.random.default_rng(seed).normal(size=g.shape)
    lhs = calculus.laplacian(np.roll(f, shift, axis=0), g)
    rhs = np.roll(calculus.laplacian(f, g), shift, axis=0)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)
