"""Numerical checks of the surface divergence theorems and the curvature split."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .patches import EdgeSet, SurfacePatch, VectorField, cube_face, face_boundary


def _face_divergence_integral(kappa: VectorField, face: SurfacePatch) -> float:
    v = face.project(kappa(face.position))
    return face.integrate(face.divergence(v))


def check_closed_surface_divergence(kappa: VectorField, cube: EdgeSet) -> tuple[float, float]:
    """Both sides of the divergence theorem on the closed unit-cube surface.

    lhs sums the discrete ``Div_S(P_n kappa)`` over all six faces; rhs is the
    edge surplus ``sum_edges int (kappa.nu+ + kappa.nu-) dsigma``.
    """
    lhs = 0.0
    for axis in range(3):
        for side in (0, 1):
            lhs += _face_divergence_integral(kappa, cube_face(axis, side, cube.n))
    rhs = 0.0
    for edge in cube.edges:
        k = kappa(edge.nodes)
        jump = k @ edge.nu[0] + k @ edge.nu[1]
        rhs += float(np.sum(jump) * edge.ds)
    return lhs, rhs


def check_open_surface_divergence(kappa: VectorField, face: SurfacePatch) -> tuple[float, float]:
    """Divergence theorem on one cube face bounded by its four edges."""
    lhs = _face_divergence_integral(kappa, face)
    rhs = 0.0
    for nodes, nu, ds in face_boundary(face):
        rhs += float(np.sum(kappa(nodes) @ nu) * ds)
    return lhs, rhs


def check_curvature_split(patch: SurfacePatch, v: np.ndarray) -> np.ndarray:
    """Nodal residual of ``Div_S(P_n v) = Div_S v + 2K v.n``.

    K is taken as ``-1/2 Div_S n`` with the same discrete operator, so the
    residual measures only the discrete product rule.
    """
    K = patch.mean_curvature(discrete=True)
    vn = np.einsum("...i,...i", v, patch.normal)
    return patch.divergence(patch.project(v)) - patch.divergence(v) - 2.0 * K * vn


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> list[float]:
    """Convergence orders between successive refinements."""
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return list(np.log(e[:-1] / e[1:]) / np.log(ratio))


def converges_at(errors: Sequence[float], order: float, floor: float = 1e-12) -> bool:
    """True when every refinement shows at least ``order``.

    Refinements where both errors sit at round-off (below ``floor``) are
    treated as converged: the method is exact on that field.
    """
    e = list(errors)
    for (a, b), p in zip(zip(e[:-1], e[1:]), observed_orders(e)):
        if a <= floor and b <= floor:
            continue
        if not p >= order:
            return False
    return True
