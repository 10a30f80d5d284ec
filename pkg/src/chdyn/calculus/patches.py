"""Parametric surface patches for checking surface calculus on curved and
nonsmooth geometry.

A patch is a structured ``n1 x n2`` lattice of nodes in a two-parameter
chart.  Nodes sit at cell centers of the parameter rectangle, so midpoint
quadrature is ``sum(f * patch.area)``.  Surface derivatives are taken in the
chart with second-order differences and mapped through the dual basis:

    Grad_S f = d_p f e^p,        Div_S v = d_p v . e^p.

Mean-curvature sign: ``K = -1/2 Div_S n``, so an outward-oriented sphere of
radius R has K = -1/R (many texts use the opposite sign).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

VectorField = Callable[[np.ndarray], np.ndarray]


def _d1(f: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)
    g = np.moveaxis(f, axis, 0)
    d = np.empty_like(g)
    d[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
    d[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
    d[-1] = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * h)
    return np.moveaxis(d, 0, axis)


@dataclass
class SurfacePatch:
    kind: str
    params: tuple[np.ndarray, np.ndarray] = field(repr=False)
    spacing: tuple[float, float]
    periodic: tuple[bool, bool]
    position: np.ndarray = field(repr=False)        # (n1, n2, 3)
    normal: np.ndarray = field(repr=False)          # outward unit normal
    basis: tuple[np.ndarray, np.ndarray] = field(repr=False)  # covariant e_1, e_2
    analytic_curvature: float | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        e1, e2 = self.basis
        g11 = np.einsum("...i,...i", e1, e1)
        g12 = np.einsum("...i,...i", e1, e2)
        g22 = np.einsum("...i,...i", e2, e2)
        det = g11 * g22 - g12 ** 2
        # dual basis e^p = g^{pq} e_q
        self.dual = (
            ((g22 / det)[..., None] * e1 - (g12 / det)[..., None] * e2),
            ((g11 / det)[..., None] * e2 - (g12 / det)[..., None] * e1),
        )
        self.area = np.sqrt(det) * self.spacing[0] * self.spacing[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.position.shape[:2]

    @property
    def h(self) -> float:
        return max(self.spacing)

    def projector(self) -> np.ndarray:
        """``P_n = 1 - n (x) n`` at every node, shape ``(n1, n2, 3, 3)``."""
        n = self.normal
        return np.eye(3) - n[..., :, None] * n[..., None, :]

    def project(self, v: np.ndarray) -> np.ndarray:
        return v - np.einsum("...i,...i", v, self.normal)[..., None] * self.normal

    def dparam(self, f: np.ndarray, p: int) -> np.ndarray:
        return _d1(f, p, self.spacing[p], self.periodic[p])

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Surface gradient of a nodal scalar; returns ``(n1, n2, 3)``."""
        return sum(self.dparam(f, p)[..., None] * self.dual[p] for p in range(2))

    def divergence(self, v: np.ndarray) -> np.ndarray:
        """Surface divergence of a nodal 3-vector field ``(n1, n2, 3)``."""
        return sum(np.einsum("...i,...i", self.dparam(v, p), self.dual[p]) for p in range(2))

    def laplace_beltrami(self, f: np.ndarray) -> np.ndarray:
        return self.divergence(self.gradient(f))

    def mean_curvature(self, discrete: bool = False) -> np.ndarray:
        if discrete or self.analytic_curvature is None:
            return -0.5 * self.divergence(self.normal)
        return np.full(self.shape, self.analytic_curvature)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f * self.area))

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return fn(self.position)


def plane_patch(n: int, size: float = 1.0) -> SurfacePatch:
    """Square ``[0, size]^2`` in the plane z = 0, normal +e_z, non-periodic."""
    h = size / n
    u = (np.arange(n) + 0.5) * h
    U, V = np.meshgrid(u, u, indexing="ij")
    pos = np.stack([U, V, np.zeros_like(U)], axis=-1)
    ones = np.ones_like(U)
    e1 = np.stack([ones, 0 * ones, 0 * ones], axis=-1)
    e2 = np.stack([0 * ones, ones, 0 * ones], axis=-1)
    nrm = np.stack([0 * ones, 0 * ones, ones], axis=-1)
    return SurfacePatch("plane", (u, u), (h, h), (False, False), pos, nrm, (e1, e2), 0.0)


def sphere_patch(n: int, radius: float = 1.0, clip: float = 0.3,
                 n_lon: int | None = None) -> SurfacePatch:
    """Colatitude band ``[clip, pi - clip]`` of a sphere, longitude periodic.

    The poles are excluded so the chart stays regular.
    """
    n_lon = n if n_lon is None else n_lon
    dth = (np.pi - 2.0 * clip) / n
    dph = 2.0 * np.pi / n_lon
    th = clip + (np.arange(n) + 0.5) * dth
    ph = (np.arange(n_lon) + 0.5) * dph
    T, P = np.meshgrid(th, ph, indexing="ij")
    st, ct, sp, cp = np.sin(T), np.cos(T), np.sin(P), np.cos(P)
    nrm = np.stack([st * cp, st * sp, ct], axis=-1)
    pos = radius * nrm
    e_th = radius * np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_ph = radius * np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
    return SurfacePatch("sphere", (th, ph), (dth, dph), (False, True), pos, nrm,
                        (e_th, e_ph), -1.0 / radius, {"radius": radius, "clip": clip})


def cube_face(axis: int, side: int, n: int) -> SurfacePatch:
    """Face ``x_axis = side`` of the unit cube ``[0, 1]^3`` with outward normal.

    The two parameters are the remaining coordinates in increasing axis order.
    """
    if axis not in (0, 1, 2) or side not in (0, 1):
        raise ValueError(f"bad cube face ({axis}, {side})")
    h = 1.0 / n
    u = (np.arange(n) + 0.5) * h
    U, V = np.meshgrid(u, u, indexing="ij")
    a1, a2 = (a for a in range(3) if a != axis)
    pos = np.zeros((n, n, 3))
    pos[..., axis] = side
    pos[..., a1] = U
    pos[..., a2] = V
    e1 = np.zeros((n, n, 3))
    e1[..., a1] = 1.0
    e2 = np.zeros((n, n, 3))
    e2[..., a2] = 1.0
    nrm = np.zeros((n, n, 3))
    nrm[..., axis] = 1.0 if side == 1 else -1.0
    return SurfacePatch("cube-face", (u, u), (h, h), (False, False), pos, nrm, (e1, e2), 0.0,
                        {"axis": axis, "side": side, "param_axes": (a1, a2)})


def cube_faces(n: int) -> list[SurfacePatch]:
    return [cube_face(a, s, n) for a in range(3) for s in (0, 1)]


@dataclass
class Edge:
    """A unit-cube edge: two fixed coordinates, one running coordinate."""

    axis: int                       # direction the edge runs along
    fixed: dict[int, int]           # the two fixed axes -> 0 or 1
    faces: tuple[tuple[int, int], tuple[int, int]]
    nu: tuple[np.ndarray, np.ndarray]   # tangent-normals of the two faces
    nodes: np.ndarray = field(repr=False)   # (n, 3) midpoint quadrature nodes
    ds: float = 0.0


@dataclass
class EdgeSet:
    n: int
    edges: list[Edge]

    def __len__(self) -> int:
        return len(self.edges)


def _unit(axis: int, sign: float) -> np.ndarray:
    v = np.zeros(3)
    v[axis] = sign
    return v


def unit_cube_edges(n: int) -> EdgeSet:
    """The 12 edges of ``[0, 1]^3`` with limiting outward tangent-normals.

    On the face ``x_b = s_b`` adjacent to an edge with fixed ``x_c = s_c``, the
    outward tangent-normal points along ``+e_c`` when ``s_c = 1`` and ``-e_c``
    when ``s_c = 0``.
    """
    ds = 1.0 / n
    t = (np.arange(n) + 0.5) * ds
    edges = []
    for axis in range(3):
        b, c = (a for a in range(3) if a != axis)
        for sb in (0, 1):
            for sc in (0, 1):
                nodes = np.zeros((n, 3))
                nodes[:, axis] = t
                nodes[:, b] = sb
                nodes[:, c] = sc
                nu_on_b = _unit(c, 1.0 if sc else -1.0)   # on face x_b = sb
                nu_on_c = _unit(b, 1.0 if sb else -1.0)   # on face x_c = sc
                edges.append(Edge(axis, {b: sb, c: sc}, ((b, sb), (c, sc)),
                                  (nu_on_b, nu_on_c), nodes, ds))
    return EdgeSet(n, edges)


def face_boundary(face: SurfacePatch) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """Boundary of a single cube face as ``(nodes, nu, ds)`` per side."""
    axis, side = face.info["axis"], face.info["side"]
    a1, a2 = face.info["param_axes"]
    n = face.shape[0]
    ds = 1.0 / n
    t = (np.arange(n) + 0.5) * ds
    sides = []
    for run, fix in ((a2, a1), (a1, a2)):
        for s in (0, 1):
            nodes = np.zeros((n, 3))
            nodes[:, axis] = side
            nodes[:, run] = t
            nodes[:, fix] = s
            sides.append((nodes, _unit(fix, 1.0 if s else -1.0), ds))
    return sides
