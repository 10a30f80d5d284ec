"""Plain-text output: legacy VTK for bulk fields, CSV for walls and series.

Every float goes through ``repr``-exact ``%.17g`` so reruns are byte-stable.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grid import Grid
from .runner import SERIES_COLUMNS
from .solver import Model, SimState

FMT = "%.17g"


def fmt(x: float) -> str:
    return FMT % x


def write_vtk(path: Path, grid: Grid, fields: Mapping[str, np.ndarray], title: str = "chdyn") -> None:
    """Legacy ASCII STRUCTURED_POINTS with cell-center samples as points."""
    nx = list(grid.shape) + [1] * (3 - grid.dim)
    sp = list(grid.spacing) + [1.0] * (3 - grid.dim)
    origin = [0.5 * h for h in grid.spacing] + [0.0] * (3 - grid.dim)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(n) for n in nx),
        "ORIGIN " + " ".join(fmt(o) for o in origin),
        "SPACING " + " ".join(fmt(h) for h in sp),
        f"POINT_DATA {int(np.prod(grid.shape))}",
    ]
    for name, values in fields.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK runs x fastest: Fortran order over (x, y, z)
        flat = np.asarray(values, dtype=float).ravel(order="F")
        lines.extend(fmt(v) for v in flat)
    path.write_text("\n".join(lines) + "\n")


def read_vtk(path: Path) -> dict[str, np.ndarray]:
    """Read back the scalar arrays written by :func:`write_vtk` (flat, x fastest)."""
    out: dict[str, np.ndarray] = {}
    lines = Path(path).read_text().splitlines()
    n = next(int(l.split()[1]) for l in lines if l.startswith("POINT_DATA"))
    i = 0
    while i < len(lines):
        if lines[i].startswith("SCALARS"):
            name = lines[i].split()[1]
            out[name] = np.array([float(v) for v in lines[i + 2:i + 2 + n]])
            i += 2 + n
        else:
            i += 1
    return out


def write_surface_csv(path: Path, grid: Grid, wall: str, fields: Mapping[str, np.ndarray]) -> None:
    """One row per wall cell: lateral coordinates then the named fields."""
    coords = grid.wall_mesh(wall)
    lateral = [("xyz"[a], coords[a].ravel()) for a in grid.lateral_axes]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c for c, _ in lateral] + list(fields))
        cols = [v for _, v in lateral] + [np.asarray(f, dtype=float).ravel() for f in fields.values()]
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])


class SeriesWriter:
    """Appends diagnostic rows to ``series.csv`` as they arrive."""

    def __init__(self, path: Path, columns: Sequence[str] = SERIES_COLUMNS):
        self.columns = tuple(columns)
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(self.columns)
        self._fh.flush()

    def __call__(self, row: Mapping) -> None:
        self._w.writerow([fmt(row[c]) for c in self.columns])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_series(path: Path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


class SnapshotWriter:
    def __init__(self, directory: Path, model: Model):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.model = model
        self.written: list[str] = []

    def __call__(self, state: SimState) -> None:
        grid = self.model.grid
        tag = f"{state.step:08d}"
        name = f"bulk_{tag}.vtk"
        write_vtk(self.dir / name, grid, {"phi": state.phi, "mu": state.mu},
                  title=f"step {state.step} t {fmt(state.t)}")
        self.written.append(name)
        for wall in state.phi_s:
            sname = f"surface_{wall}_{tag}.csv"
            write_surface_csv(self.dir / sname, grid, wall,
                              {"phi_s": state.phi_s[wall], "mu_s": state.mu_s[wall]})
            self.written.append(sname)


def write_manifest(path: Path, resolved: Mapping, extra: Mapping | None = None) -> None:
    body = {"config": resolved}
    if extra:
        body.update(extra)
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def write_rows(path: Path, rows: Iterable[Mapping], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
