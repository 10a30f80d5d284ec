"""Conservation, energy, decay and consistency reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import calculus, physics
from .grid import WALLS, Grid, integrate_bulk, integrate_surface
from .solver import Model, SimState, mu_wall_trace, wall_trace

ABS_FLOOR = 1e-14


def total_species(state: SimState, grid: Grid, beta: float = 1.0) -> float:
    """``beta * int phi + sum over dynamic walls of int phi_s``."""
    total = beta * integrate_bulk(state.phi, grid)
    for w in WALLS:
        if w in state.phi_s:
            total += integrate_surface(state.phi_s[w], grid)
    return float(total)


def species_parts(state: SimState, grid: Grid) -> dict[str, float]:
    out = {"bulk": float(integrate_bulk(state.phi, grid))}
    for w in WALLS:
        out[w] = float(integrate_surface(state.phi_s[w], grid)) if w in state.phi_s else 0.0
    return out


@dataclass(frozen=True)
class EnergyBreakdown:
    bulk_potential: float
    bulk_gradient: float
    surface_potential: float
    surface_gradient: float

    @property
    def bulk(self) -> float:
        return self.bulk_potential + self.bulk_gradient

    @property
    def surface(self) -> float:
        return self.surface_potential + self.surface_gradient

    @property
    def total(self) -> float:
        return self.bulk + self.surface


def free_energy(model: Model, state: SimState) -> EnergyBreakdown:
    """Discrete free energy whose variation gives the solver's potentials.

    Gradients are compact face differences.  Each wall adds the half cell
    between the adjacent center and the bulk trace,
    ``eps * A * (phi_adj - theta)^2 / h``.  A static Neumann wall replaces
    that term with the work ``-A xi phi_adj`` of the assigned traction.
    """
    grid, p = model.grid, model.params
    a = grid.wall_axis
    bulk_pot = integrate_bulk(physics.potential(state.phi, p.potential_bulk), grid) / p.eps

    grad2 = 0.0
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        if axis == a:
            d = np.diff(state.phi, axis=a) / h
        else:
            d = (np.roll(state.phi, -1, axis=axis) - state.phi) / h
        grad2 += float(np.sum(d * d)) * grid.cell_volume
    bulk_grad = 0.5 * p.eps * grad2

    for w in WALLS:
        adj = grid.adjacent_layer(state.phi, w)
        static = model.bc[w].static
        if static is not None and static.xi is not None:
            bulk_grad -= float(static.xi) * integrate_surface(adj, grid)
            continue
        theta = wall_trace(model, state, w)
        bulk_grad += p.eps * integrate_surface((adj - theta) ** 2, grid) / grid.h_wall

    surf_pot = 0.0
    surf_grad = 0.0
    for w, ps in state.phi_s.items():
        surf_pot += integrate_surface(physics.potential(ps, p.potential_surface), grid) / p.delta
        faces = calculus.wall_face_gradient(ps, grid)
        surf_grad += 0.5 * p.iota * p.delta * sum(
            integrate_surface(f * f, grid) for f in faces)
    return EnergyBreakdown(float(bulk_pot), float(bulk_grad), float(surf_pot), float(surf_grad))


def power_terms(model: Model, state: SimState, rates: Mapping) -> dict[str, float]:
    """Rate-of-energy budget at ``state`` for the given time derivatives.

    Returns the bulk and surface transport dissipation, the two Robin
    dissipations, and the power supplied by sources and external microforces.
    Only dynamic walls contribute to the boundary terms.
    """
    grid, p, src = model.grid, model.params, model.sources
    a = grid.wall_axis
    mu = state.mu
    bulk = 0.0
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        d = np.diff(mu, axis=a) / h if axis == a else (np.roll(mu, -1, axis=axis) - mu) / h
        bulk += p.m_bulk * float(np.sum(d * d)) * grid.cell_volume
    surf = 0.0
    wall_transfer = 0.0
    robin_phi = 0.0
    robin_mu = 0.0
    source = integrate_bulk(mu * src.bulk("s_bulk", grid) + src.bulk("gamma", grid) * rates["phi"], grid)
    for w in model.dynamic_walls:
        faces = calculus.wall_face_gradient(state.mu_s[w], grid)
        surf += p.m_surface * sum(integrate_surface(f * f, grid) for f in faces)
        source += integrate_surface(
            state.mu_s[w] * src.surface("s_surface", grid, w)
            + src.surface("zeta", grid, w) * rates["phi_s"][w], grid)
        # half-cell resistance between mu_adj and the wall, plus the Robin layer
        mu_adj = grid.adjacent_layer(mu, w)
        wall_transfer += integrate_surface(-state.flux[w] * (p.beta * state.mu_s[w] - mu_adj), grid)
        if model.bc[w].mu == "robin":
            jump = p.beta * state.mu_s[w] - mu_wall_trace(model, state, w)
            robin_mu += integrate_surface(jump * jump, grid) / model.L_mu(w)
        if w in rates.get("trace", {}):
            diff = rates["phi_s"][w] - rates["trace"][w]
            robin_phi += integrate_surface(diff * diff, grid) / model.L_phi(w)
    return {
        "bulk": float(bulk), "surface": float(surf), "wall_transfer": float(wall_transfer),
        "robin_phi": float(robin_phi), "robin_mu": float(robin_mu), "source": float(source),
    }


def robin_dissipation(model: Model, state: SimState, rates: Mapping) -> float:
    """``int (1/L_phi)(phi_s' - phi_P')^2 + int (1/L_mu)(beta mu_s - mu_P)^2``."""
    t = power_terms(model, state, rates)
    return t["robin_phi"] + t["robin_mu"]


@dataclass
class DecayReport:
    t: np.ndarray
    species: np.ndarray
    energy: np.ndarray
    d_energy: np.ndarray
    violation: np.ndarray
    tol: float
    source_work: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_violations(self) -> int:
        return int(np.count_nonzero(self.flagged))

    @property
    def flagged(self) -> np.ndarray:
        scale = np.maximum(1.0, np.abs(self.energy[:-1]))
        return self.d_energy > self.tol * scale

    @property
    def max_violation(self) -> float:
        return float(self.violation.max()) if self.violation.size else 0.0

    @property
    def total_source_work(self) -> float:
        return float(np.sum(self.source_work))

    @property
    def species_drift(self) -> float:
        s0 = self.species[0]
        return float(np.max(np.abs(self.species - s0)) / max(1.0, abs(s0), ABS_FLOOR))


def decay_report(series: Sequence[Mapping] | Iterable[Mapping], tol: float = 1e-12) -> DecayReport:
    """Per-step energy changes of a recorded series.

    Each record needs ``t``, ``mass_total`` and ``energy_total``; an optional
    ``source_work`` (the integrated source power over the step that ended at
    that record) is totalled so a sourced run can be compared against its
    bound instead of against zero.
    """
    rows = list(series)
    t = np.array([r["t"] for r in rows], dtype=float)
    species = np.array([r["mass_total"] for r in rows], dtype=float)
    energy = np.array([r["energy_total"] for r in rows], dtype=float)
    d = np.diff(energy)
    work = np.array([r.get("source_work", 0.0) for r in rows[1:]], dtype=float)
    return DecayReport(t, species, energy, d, np.maximum(d, 0.0), tol, work)


def consistency_residuals(model: Model, state: SimState, shared: bool = True,
                          interior: int = 0) -> tuple[float, float]:
    """Max-norm residuals of the bulk and surface microforce balances.

    Bulk: ``div xi + pi + gamma``.  Surface: ``Div_S tau + varpi + zeta - xi_S``
    with ``xi_S = eps dn phi`` as used by the solver.  ``shared=False`` swaps
    in the wide-stencil cell-centered operators for the divergence terms;
    the residual then measures the truncation error between the two
    discretizations.  ``interior`` drops that many layers next to each wall
    from the bulk maximum.
    """
    grid, p, src = model.grid, model.params, model.sources
    if state.mu is None:
        from .solver import refresh
        refresh(model, state)
    pi, varpi = physics.internal_microforces(state.mu, state.phi, state.mu_s, state.phi_s, p)
    if shared:
        from .solver import phi_wall_closure
        ghosts = {w: phi_wall_closure(model, state, w) for w in WALLS}
        div_xi = calculus.face_divergence(
            physics.bulk_microstress_faces(state.phi, grid, p, ghosts), grid)
    else:
        div_xi = calculus.divergence(physics.bulk_microstress(state.phi, grid, p), grid)
    r_bulk = div_xi + pi + src.bulk("gamma", grid)
    if interior:
        r_bulk = np.take(r_bulk, range(interior, grid.shape[grid.wall_axis] - interior),
                         axis=grid.wall_axis)
    bulk = float(np.max(np.abs(r_bulk)))

    surf = 0.0
    for w in model.dynamic_walls:
        if shared:
            div_tau = calculus.wall_face_divergence(
                physics.surface_microstress_faces(state.phi_s[w], grid, p), grid)
        else:
            div_tau = calculus.surface_divergence(
                physics.surface_microstress(state.phi_s[w], grid, p), grid)
        xi_s = p.eps * state.dn_phi[w]
        r = div_tau + varpi[w] + src.surface("zeta", grid, w) - xi_s
        surf = max(surf, float(np.max(np.abs(r))))
    return bulk, surf
