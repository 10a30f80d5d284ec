"""Coupled bulk/surface Cahn-Hilliard dynamics on a periodic slab."""

__version__ = "0.1.0"

from .grid import Grid, GridSpec, build_grid, integrate_bulk, integrate_surface  # noqa: E402
from .physics import PhysParams, Sources  # noqa: E402
from .solver import (  # noqa: E402
    BcConfig,
    Model,
    SimState,
    StaticEnv,
    WallBc,
    initial_state,
    stability_dt,
    step_explicit,
    step_semi_implicit,
)

__all__ = [
    "BcConfig", "Grid", "GridSpec", "Model", "PhysParams", "SimState", "Sources", "StaticEnv",
    "WallBc", "build_grid", "initial_state", "integrate_bulk", "integrate_surface",
    "stability_dt", "step_explicit", "step_semi_implicit",
]
