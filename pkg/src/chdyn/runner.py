"""Trajectory driver: initial conditions, the step loop, and the diagnostic series."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import diagnostics
from .grid import WALLS, Grid
from .solver import STEPPERS, Model, SimState, initial_state, rates

logger = logging.getLogger(__name__)

SERIES_COLUMNS = (
    "t", "mass_bulk", "mass_surface_low", "mass_surface_high", "mass_total",
    "energy_bulk", "energy_surface", "energy_total", "decay_violation",
)


# -- initial conditions -------------------------------------------------------------

def _cosine_profile(grid: Grid, coords: Sequence[np.ndarray], mean: float,
                    modes: Sequence[Mapping]) -> np.ndarray:
    """``mean + sum a prod cos(...)``: periodic wavenumbers on lateral axes,
    half-wavelength (zero-slope) modes along the wall axis."""
    out = np.full(np.shape(coords[0]), float(mean))
    for mode in modes:
        term = np.full_like(out, float(mode["amplitude"]))
        for axis, k in enumerate(mode["k"]):
            L = grid.extents[axis]
            factor = np.pi if axis == grid.wall_axis else 2.0 * np.pi
            term = term * np.cos(factor * k * coords[axis] / L)
        out += term
    return out


def make_initial_state(model: Model, spec: Mapping, base_dir: Path | None = None) -> SimState:
    """Build the initial state from an initial-condition spec.

    ``kind`` is ``noise`` (``mean + amplitude * U(-1, 1)`` from a seeded
    generator), ``cosine`` (``mean`` plus ``modes``) or ``file`` (``.npy``
    arrays).  Surface fields default to the adjacent bulk layer, except for
    cosine data where the profile is evaluated on the wall itself.
    """
    grid = model.grid
    kind = spec["kind"]
    surface: dict[str, np.ndarray] = {}
    if kind == "noise":
        rng = np.random.default_rng(int(spec["seed"]))
        phi = float(spec.get("mean", 0.0)) + float(spec["amplitude"]) * rng.uniform(-1.0, 1.0, grid.shape)
    elif kind == "cosine":
        modes = spec.get("modes", [])
        for mode in modes:
            if len(mode["k"]) != grid.dim:
                raise ValueError(f"cosine mode needs {grid.dim} wavenumbers, got {mode['k']}")
        phi = _cosine_profile(grid, grid.mesh, spec.get("mean", 0.0), modes)
        for w in model.dynamic_walls:
            surface[w] = _cosine_profile(grid, grid.wall_mesh(w), spec.get("mean", 0.0), modes)
    elif kind == "file":
        base = Path(base_dir or ".")
        phi = np.load(base / spec["path"])
        for w in WALLS:
            key = f"surface_{w}"
            if spec.get(key):
                surface[w] = np.load(base / spec[key])
    else:
        raise ValueError(f"unknown initial-condition kind {kind!r}")
    return initial_state(model, phi, {w: v for w, v in surface.items() if w in model.dynamic_walls})


# -- series ---------------------------------------------------------------------------

def record(model: Model, state: SimState, previous_energy: float | None = None,
           source_work: float = 0.0) -> dict:
    grid = model.grid
    parts = diagnostics.species_parts(state, grid)
    energy = diagnostics.free_energy(model, state)
    violation = 0.0 if previous_energy is None else max(0.0, energy.total - previous_energy)
    return {
        "t": state.t,
        "step": state.step,
        "mass_bulk": parts["bulk"],
        "mass_surface_low": parts["low"],
        "mass_surface_high": parts["high"],
        "mass_total": diagnostics.total_species(state, grid, model.params.beta),
        "energy_bulk": energy.bulk,
        "energy_surface": energy.surface,
        "energy_total": energy.total,
        "decay_violation": violation,
        "source_work": source_work,
    }


@dataclass
class Trajectory:
    series: list[dict] = field(default_factory=list)
    snapshots: list[SimState] = field(default_factory=list)
    final: SimState | None = None
    dt: float = 0.0

    def decay_report(self, tol: float = 1e-12) -> diagnostics.DecayReport:
        return diagnostics.decay_report(self.series, tol)


def run(model: Model, state: SimState, dt: float, steps: int, stepper: str = "explicit",
        snapshot_every: int = 0, series_every: int = 1,
        on_snapshot: Callable[[SimState], None] | None = None,
        on_record: Callable[[dict], None] | None = None,
        keep_snapshots: bool = True) -> Trajectory:
    """Advance ``steps`` steps of size ``dt``.

    Snapshots are taken at step 0, every ``snapshot_every`` steps (0 means
    only the first and last) and at the end.  A series record is taken at
    the same cadence rule with ``series_every``; each record carries the
    source work accumulated since the previous one.  Callbacks fire as data
    is produced, so a caller writing files keeps everything up to a failure.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if dt <= 0 and steps > 0:
        raise ValueError("dt must be positive")
    step_fn = STEPPERS[stepper]
    traj = Trajectory(dt=dt)

    def snap(s: SimState):
        if keep_snapshots:
            traj.snapshots.append(s)
        if on_snapshot is not None:
            on_snapshot(s)

    def rec(s: SimState, prev: float | None, work: float) -> float:
        row = record(model, s, prev, work)
        traj.series.append(row)
        if on_record is not None:
            on_record(row)
        return row["energy_total"]

    snap(state)
    energy = rec(state, None, 0.0)
    work = 0.0
    track_work = not model.sources.is_zero
    for n in range(1, steps + 1):
        if track_work:
            power = diagnostics.power_terms(model, state, rates(model, state))["source"]
        state = step_fn(model, state, dt)
        if track_work:
            work += dt * power
        last = n == steps
        if last or (series_every and n % series_every == 0):
            energy = rec(state, energy, work)
            work = 0.0
        if last or (snapshot_every and n % snapshot_every == 0):
            snap(state)
    traj.final = state
    return traj
