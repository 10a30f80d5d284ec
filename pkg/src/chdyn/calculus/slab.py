"""Finite-difference operators on the slab and on its flat walls.

Periodic axes wrap.  The wall axis is bounded: cell-centered operators use the
three-point second-order one-sided stencil at the two end layers, and the
compact (face-based) operators take ghost layers, which default to cubic
extrapolation when the caller does not supply a closure.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..grid import WALLS, Grid


def _d1_periodic(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)


def _d1_bounded(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    f = np.moveaxis(f, axis, 0)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return np.moveaxis(d, 0, axis)


def partial(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Second-order first derivative of a bulk field along ``axis``."""
    h = grid.spacing[axis]
    if axis == grid.wall_axis:
        return _d1_bounded(f, axis, h)
    return _d1_periodic(f, axis, h)


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = grid.check_bulk(f)
    return np.stack([partial(f, grid, a) for a in range(grid.dim)])


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Cell-centered divergence of a bulk vector field (wide stencil)."""
    return sum(partial(v[a], grid, a) for a in range(grid.dim))


def extrapolated_ghost(f: np.ndarray, grid: Grid, wall: str) -> np.ndarray:
    """Polynomial extrapolation of ``f`` one cell past ``wall``.

    Quartic when five layers exist, so the compact Laplacian in the wall
    layer is third-order accurate; cubic on the minimal four-cell lattice.
    """
    if grid.shape[grid.wall_axis] >= 5:
        f0, f1, f2, f3, f4 = (grid.adjacent_layer(f, wall, k) for k in range(5))
        return 5.0 * f0 - 10.0 * f1 + 10.0 * f2 - 5.0 * f3 + f4
    f0, f1, f2, f3 = (grid.adjacent_layer(f, wall, k) for k in range(4))
    return 4.0 * f0 - 6.0 * f1 + 4.0 * f2 - f3


def face_gradient(f: np.ndarray, grid: Grid,
                  ghosts: Mapping[str, np.ndarray] | None = None) -> list[np.ndarray]:
    """Normal differences on cell faces, one array per axis.

    Along a periodic axis entry ``i`` is the face between cells ``i`` and
    ``i+1`` (wrapping).  Along the wall axis there are ``n+1`` faces; the two
    outer ones use the ghost layers.
    """
    f = grid.check_bulk(f)
    ghosts = dict(ghosts or {})
    for wall in WALLS:
        if ghosts.get(wall) is None:
            ghosts[wall] = extrapolated_ghost(f, grid, wall)
    out = []
    for a in range(grid.dim):
        h = grid.spacing[a]
        if a == grid.wall_axis:
            padded = np.concatenate(
                [np.expand_dims(ghosts["low"], a), f, np.expand_dims(ghosts["high"], a)], axis=a
            )
            out.append(np.diff(padded, axis=a) / h)
        else:
            out.append((np.roll(f, -1, axis=a) - f) / h)
    return out


def face_divergence(faces: list[np.ndarray], grid: Grid) -> np.ndarray:
    """Cell divergence of face-normal components (the conservative form)."""
    total = None
    for a in range(grid.dim):
        h = grid.spacing[a]
        F = faces[a]
        if a == grid.wall_axis:
            d = np.diff(F, axis=a) / h
        else:
            d = (F - np.roll(F, 1, axis=a)) / h
        total = d if total is None else total + d
    return total


def laplacian(f: np.ndarray, grid: Grid,
              ghosts: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
    """Compact ``2*dim+1``-point Laplacian, assembled as div of face differences."""
    return face_divergence(face_gradient(f, grid, ghosts), grid)


def normal_derivative(f: np.ndarray, grid: Grid, wall: str) -> np.ndarray:
    """Outward normal derivative of a bulk field at ``wall``.

    One-sided, second order, from the three layers nearest the wall (cell
    centers at h/2, 3h/2, 5h/2); exact for quadratics in the wall coordinate.
    """
    f = grid.check_bulk(f)
    h = grid.h_wall
    f0, f1, f2 = (grid.adjacent_layer(f, wall, k) for k in range(3))
    inward = (-2.0 * f0 + 3.0 * f1 - f2) / h
    return -inward


# -- flat walls -------------------------------------------------------------

def _wall_spacing(grid: Grid) -> list[float]:
    return [grid.spacing[a] for a in grid.lateral_axes]


def wall_partial(fs: np.ndarray, grid: Grid, k: int) -> np.ndarray:
    """Derivative of a wall field along its ``k``-th lateral axis (periodic)."""
    return _d1_periodic(fs, k, _wall_spacing(grid)[k])


def flat_surface_gradient(fs: np.ndarray, grid: Grid) -> np.ndarray:
    """In-plane gradient as a full ``dim`` vector with zero wall component."""
    fs = grid.check_surface(fs)
    out = np.zeros((grid.dim, *grid.wall_shape))
    for k, a in enumerate(grid.lateral_axes):
        out[a] = wall_partial(fs, grid, k)
    return out


def flat_surface_divergence(vs: np.ndarray, grid: Grid) -> np.ndarray:
    # the wall component is normal and has no in-plane derivative on a flat wall
    return sum(wall_partial(vs[a], grid, k) for k, a in enumerate(grid.lateral_axes))


def wall_face_gradient(fs: np.ndarray, grid: Grid) -> list[np.ndarray]:
    hs = _wall_spacing(grid)
    return [(np.roll(fs, -1, axis=k) - fs) / hs[k] for k in range(fs.ndim)]


def wall_face_divergence(faces: list[np.ndarray], grid: Grid) -> np.ndarray:
    hs = _wall_spacing(grid)
    total = None
    for k, F in enumerate(faces):
        d = (F - np.roll(F, 1, axis=k)) / hs[k]
        total = d if total is None else total + d
    return total


def flat_laplace_beltrami(fs: np.ndarray, grid: Grid) -> np.ndarray:
    """Compact periodic in-plane Laplacian."""
    fs = grid.check_surface(fs)
    return wall_face_divergence(wall_face_gradient(fs, grid), grid)
