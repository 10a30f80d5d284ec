"""Discrete differential operators in the bulk, on flat walls, and on patches."""

from __future__ import annotations

import numpy as np

from ..grid import Grid
from .patches import (
    EdgeSet,
    SurfacePatch,
    cube_face,
    cube_faces,
    plane_patch,
    sphere_patch,
    unit_cube_edges,
)
from .slab import (
    divergence,
    face_divergence,
    face_gradient,
    flat_laplace_beltrami,
    flat_surface_divergence,
    flat_surface_gradient,
    gradient,
    laplacian,
    normal_derivative,
    wall_face_divergence,
    wall_face_gradient,
)
from .theorems import (
    check_closed_surface_divergence,
    check_curvature_split,
    check_open_surface_divergence,
    converges_at,
    observed_orders,
)


def surface_gradient(f: np.ndarray, domain: Grid | SurfacePatch) -> np.ndarray:
    """Surface gradient on a flat wall (``domain`` a Grid) or on a patch."""
    if isinstance(domain, SurfacePatch):
        return domain.gradient(f)
    return flat_surface_gradient(f, domain)


def surface_divergence(v: np.ndarray, domain: Grid | SurfacePatch) -> np.ndarray:
    if isinstance(domain, SurfacePatch):
        return domain.divergence(v)
    return flat_surface_divergence(v, domain)


def laplace_beltrami(f: np.ndarray, domain: Grid | SurfacePatch) -> np.ndarray:
    if isinstance(domain, SurfacePatch):
        return domain.laplace_beltrami(f)
    return flat_laplace_beltrami(f, domain)


def mean_curvature(domain: Grid | SurfacePatch, discrete: bool = False) -> np.ndarray:
    """``K = -1/2 Div_S n``; flat walls have K = 0.

    With an outward normal a sphere of radius R has K = -1/R.  Many texts
    use the opposite sign.
    """
    if isinstance(domain, SurfacePatch):
        return domain.mean_curvature(discrete)
    return np.zeros(domain.wall_shape)


__all__ = [
    "EdgeSet",
    "SurfacePatch",
    "check_closed_surface_divergence",
    "check_curvature_split",
    "check_open_surface_divergence",
    "converges_at",
    "cube_face",
    "cube_faces",
    "divergence",
    "face_divergence",
    "face_gradient",
    "gradient",
    "laplace_beltrami",
    "laplacian",
    "mean_curvature",
    "normal_derivative",
    "observed_orders",
    "plane_patch",
    "sphere_patch",
    "surface_divergence",
    "surface_gradient",
    "unit_cube_edges",
    "wall_face_divergence",
    "wall_face_gradient",
]
