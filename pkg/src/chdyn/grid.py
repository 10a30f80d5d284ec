"""Slab geometry: a laterally periodic box with two flat dynamic walls.

Fields are plain ``numpy`` arrays.  A bulk field has shape ``grid.shape`` (one
value per cell center); a surface field lives on one wall and has shape
``grid.wall_shape``, i.e. the bulk lattice with the wall axis removed, so that
wall cell ``k`` sits directly on top of the adjacent bulk cell ``k``.

Vector fields carry the component index first: ``(dim, *shape)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

WALLS = ("low", "high")


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extents: tuple[float, ...]
    cells: tuple[int, ...]
    wall_axis: int = -1

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(float(e) for e in self.extents))
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.extents) != self.dim or len(self.cells) != self.dim:
            raise ValueError("extents and cells need one entry per axis")
        if any(not np.isfinite(e) or e <= 0 for e in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")
        if any(c < 4 for c in self.cells):
            raise ValueError(f"need at least 4 cells per axis, got {self.cells}")
        wall_axis = self.wall_axis % self.dim if -self.dim <= self.wall_axis < self.dim else None
        if wall_axis is None:
            raise ValueError(f"wall_axis {self.wall_axis} out of range for dim={self.dim}")
        object.__setattr__(self, "wall_axis", wall_axis)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extents, self.cells))


@dataclass(frozen=True)
class Grid:
    """Cell-centered lattice built from a :class:`GridSpec`."""

    spec: GridSpec
    centers: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.cells

    @property
    def spacing(self) -> tuple[float, ...]:
        return self.spec.spacing

    @property
    def extents(self) -> tuple[float, ...]:
        return self.spec.extents

    @property
    def wall_axis(self) -> int:
        return self.spec.wall_axis

    @property
    def lateral_axes(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.dim) if a != self.wall_axis)

    @property
    def wall_shape(self) -> tuple[int, ...]:
        return tuple(self.shape[a] for a in self.lateral_axes)

    @property
    def h_wall(self) -> float:
        return self.spacing[self.wall_axis]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def wall_cell_area(self) -> float:
        return float(np.prod([self.spacing[a] for a in self.lateral_axes]))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinates broadcast to the full bulk shape."""
        return tuple(np.meshgrid(*self.centers, indexing="ij"))

    def wall_position(self, wall: str) -> float:
        _check_wall(wall)
        return 0.0 if wall == "low" else self.extents[self.wall_axis]

    def wall_mesh(self, wall: str) -> tuple[np.ndarray, ...]:
        """Full ``dim`` coordinates of the wall cell centers, each of ``wall_shape``."""
        lateral = np.meshgrid(*(self.centers[a] for a in self.lateral_axes), indexing="ij")
        coords = []
        k = 0
        for a in range(self.dim):
            if a == self.wall_axis:
                coords.append(np.full(self.wall_shape, self.wall_position(wall)))
            else:
                coords.append(lateral[k])
                k += 1
        return tuple(coords)

    def normal(self, wall: str) -> np.ndarray:
        """Outward unit normal of ``wall``."""
        _check_wall(wall)
        n = np.zeros(self.dim)
        n[self.wall_axis] = -1.0 if wall == "low" else 1.0
        return n

    def adjacent_index(self, wall: str) -> int:
        """Index along the wall axis of the bulk layer touching ``wall``."""
        _check_wall(wall)
        return 0 if wall == "low" else self.shape[self.wall_axis] - 1

    def adjacent_layer(self, f: np.ndarray, wall: str, offset: int = 0) -> np.ndarray:
        """Bulk layer ``offset`` cells inward from ``wall`` (a wall-shaped view)."""
        i = offset if wall == "low" else self.shape[self.wall_axis] - 1 - offset
        return np.take(f, i, axis=self.wall_axis)

    def check_bulk(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"{name} has shape {f.shape}, expected {self.shape}")
        return f

    def check_surface(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.wall_shape:
            raise ValueError(f"{name} has shape {f.shape}, expected {self.wall_shape}")
        return f


def _check_wall(wall: str) -> None:
    if wall not in WALLS:
        raise ValueError(f"wall must be one of {WALLS}, got {wall!r}")


def build_grid(spec: GridSpec | None = None, *, dim: int | None = None,
               extents: Sequence[float] | None = None, cells: Sequence[int] | None = None,
               wall_axis: int = -1) -> Grid:
    if spec is None:
        if extents is None or cells is None:
            raise ValueError("either a GridSpec or extents and cells are required")
        spec = GridSpec(dim or len(cells), tuple(extents), tuple(cells), wall_axis)
    centers = tuple((np.arange(n) + 0.5) * h for n, h in zip(spec.cells, spec.spacing))
    return Grid(spec, centers)


def integrate_bulk(f: np.ndarray, grid: Grid) -> float:
    """Midpoint rule over the bulk cells."""
    f = grid.check_bulk(f)
    return float(np.sum(f) * grid.cell_volume)


def integrate_surface(f: np.ndarray, grid: Grid) -> float:
    """Midpoint rule over one wall."""
    f = grid.check_surface(f)
    return float(np.sum(f) * grid.wall_cell_area)
