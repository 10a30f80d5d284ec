"""Constitutive layer: potentials, energy densities, microstresses, chemical
potentials, fluxes, internal microforces and microtractions.

The chemical potentials are built from the face-based microstress so that the
microforce balances hold to round-off when checked with the same operators.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from . import calculus
from .grid import WALLS, Grid

POTENTIALS = ("double-well", "quadratic")


def potential(phi, which: str = "double-well"):
    """Double-well ``(phi^2 - 1)^2 / 4`` or quadratic ``phi^2 / 2``."""
    phi = np.asarray(phi, dtype=float)
    if which == "double-well":
        return 0.25 * (phi * phi - 1.0) ** 2
    if which == "quadratic":
        return 0.5 * phi * phi
    raise ValueError(f"unknown potential {which!r}; choose from {POTENTIALS}")


def potential_prime(phi, which: str = "double-well"):
    phi = np.asarray(phi, dtype=float)
    if which == "double-well":
        return phi * phi * phi - phi
    if which == "quadratic":
        return phi.copy()
    raise ValueError(f"unknown potential {which!r}; choose from {POTENTIALS}")


def potential_curvature_bound(which: str) -> float:
    """max |f''| over [-1, 1]; used as the stabilization constant."""
    return {"double-well": 2.0, "quadratic": 1.0}[which]


@dataclass(frozen=True)
class PhysParams:
    eps: float = 0.05
    delta: float = 0.05
    iota: float = 1.0
    beta: float = 1.0
    m_bulk: float = 1.0
    m_surface: float = 1.0
    L_phi: float = 1.0
    L_mu: float = 1.0
    potential_bulk: str = "double-well"
    potential_surface: str = "double-well"

    def __post_init__(self):
        for name in ("eps", "delta", "iota", "beta", "m_bulk", "m_surface", "L_phi", "L_mu"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a real positive constant, got {value}")
        for name in ("potential_bulk", "potential_surface"):
            if getattr(self, name) not in POTENTIALS:
                raise ValueError(f"{name} must be one of {POTENTIALS}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Sources:
    """Static external microforces and species supplies (default zero).

    Each entry is either a scalar or an array of the matching field shape;
    the surface entries may also be a mapping ``wall -> value``.
    """

    gamma: float | np.ndarray = 0.0
    zeta: float | np.ndarray | Mapping[str, float | np.ndarray] = 0.0
    s_bulk: float | np.ndarray = 0.0
    s_surface: float | np.ndarray | Mapping[str, float | np.ndarray] = 0.0

    def bulk(self, name: str, grid: Grid) -> np.ndarray:
        value = getattr(self, name)
        return np.broadcast_to(np.asarray(value, dtype=float), grid.shape)

    def surface(self, name: str, grid: Grid, wall: str) -> np.ndarray:
        value = getattr(self, name)
        if isinstance(value, Mapping):
            value = value.get(wall, 0.0)
        return np.broadcast_to(np.asarray(value, dtype=float), grid.wall_shape)

    @property
    def is_zero(self) -> bool:
        def zero(v):
            if isinstance(v, Mapping):
                return all(zero(x) for x in v.values())
            return not np.any(np.asarray(v))
        return all(zero(getattr(self, n)) for n in ("gamma", "zeta", "s_bulk", "s_surface"))


# -- energy densities ---------------------------------------------------------

def bulk_energy_density(phi, grad_phi, params: PhysParams):
    """``f(phi)/eps + eps/2 |grad phi|^2`` pointwise."""
    g2 = np.sum(np.asarray(grad_phi) ** 2, axis=0)
    return potential(phi, params.potential_bulk) / params.eps + 0.5 * params.eps * g2


def surface_energy_density(phi_s, grad_s_phi, params: PhysParams):
    """``g(phi_s)/delta + iota delta/2 |Grad_S phi_s|^2`` pointwise."""
    g2 = np.sum(np.asarray(grad_s_phi) ** 2, axis=0)
    return (potential(phi_s, params.potential_surface) / params.delta
            + 0.5 * params.iota * params.delta * g2)


# -- microstresses ------------------------------------------------------------

def bulk_microstress(phi, grid: Grid, params: PhysParams) -> np.ndarray:
    """Cell-centered ``xi = eps grad phi``."""
    return params.eps * calculus.gradient(phi, grid)


def bulk_microstress_faces(phi, grid: Grid, params: PhysParams,
                           ghosts: Mapping[str, np.ndarray] | None = None) -> list[np.ndarray]:
    """``xi`` normal components on cell faces; the conservative counterpart of
    :func:`bulk_microstress` used to assemble the chemical potential."""
    return [params.eps * d for d in calculus.face_gradient(phi, grid, ghosts)]


def surface_microstress(phi_s, grid: Grid, params: PhysParams) -> np.ndarray:
    """``tau = iota delta Grad_S phi_s``; tangent to the wall by construction."""
    return params.iota * params.delta * calculus.surface_gradient(phi_s, grid)


def surface_microstress_faces(phi_s, grid: Grid, params: PhysParams) -> list[np.ndarray]:
    return [params.iota * params.delta * d for d in calculus.wall_face_gradient(phi_s, grid)]


# -- chemical potentials --------------------------------------------------------

def bulk_chemical_potential(phi, gamma, grid: Grid, params: PhysParams,
                            ghosts: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
    """``mu_P = -div xi + f'(phi)/eps - gamma`` with ``div xi = eps lap phi``.

    ``ghosts`` close the wall axis (the solver passes the layers implied by
    the active boundary conditions); without them the field is extrapolated.
    """
    div_xi = calculus.face_divergence(bulk_microstress_faces(phi, grid, params, ghosts), grid)
    return -div_xi + potential_prime(phi, params.potential_bulk) / params.eps - gamma


def surface_chemical_potential(phi_s, phi, zeta, grid: Grid, params: PhysParams, wall: str,
                               dn_phi: np.ndarray | None = None) -> np.ndarray:
    """``mu_dP = -iota delta Lap_S phi_s + g'(phi_s)/delta + eps d_n phi - zeta``.

    ``dn_phi`` is the outward normal derivative of the bulk field at the wall;
    when omitted it is taken from the three-point one-sided stencil.
    """
    if dn_phi is None:
        dn_phi = calculus.normal_derivative(phi, grid, wall)
    div_tau = calculus.wall_face_divergence(surface_microstress_faces(phi_s, grid, params), grid)
    return (-div_tau + potential_prime(phi_s, params.potential_surface) / params.delta
            + params.eps * dn_phi - zeta)


# -- fluxes, microforces, tractions -------------------------------------------------

def bulk_flux(mu, grid: Grid, params: PhysParams) -> np.ndarray:
    return -params.m_bulk * calculus.gradient(mu, grid)


def surface_flux(mu_s, grid: Grid, params: PhysParams) -> np.ndarray:
    return -params.m_surface * calculus.surface_gradient(mu_s, grid)


def dissipation_density(grad_mu, mobility: float) -> np.ndarray:
    """``grad mu . m grad mu``, nonnegative for positive mobility."""
    return mobility * np.sum(np.asarray(grad_mu) ** 2, axis=0)


def internal_microforces(mu, phi, mu_s, phi_s, params: PhysParams):
    """``pi = mu_P - f'(phi_P)/eps`` and ``varpi = mu_dP - g'(phi_dP)/delta``.

    ``mu_s`` and ``phi_s`` may be arrays or mappings ``wall -> array``.
    """
    pi = mu - potential_prime(phi, params.potential_bulk) / params.eps

    def one(m, p):
        return m - potential_prime(p, params.potential_surface) / params.delta

    if isinstance(mu_s, Mapping):
        varpi = {w: one(mu_s[w], phi_s[w]) for w in mu_s}
    else:
        varpi = one(mu_s, phi_s)
    return pi, varpi


def surface_microtraction(xi: np.ndarray, grid: Grid, wall: str) -> np.ndarray:
    """``xi_S = xi . n`` on a wall, from a cell-centered microstress.

    The microstress is evaluated at the wall by second-order extrapolation
    of the three adjacent layers.
    """
    n = grid.normal(wall)
    xi_n = np.tensordot(n, xi, axes=1)
    l0, l1, l2 = (grid.adjacent_layer(xi_n, wall, k) for k in range(3))
    return (15.0 * l0 - 10.0 * l1 + 3.0 * l2) / 8.0


def edge_microtraction(tau_plus: np.ndarray, nu_plus: np.ndarray,
                       tau_minus: np.ndarray, nu_minus: np.ndarray) -> np.ndarray:
    """``tau_dS = tau+ . nu+ + tau- . nu-`` along an edge."""
    return tau_plus @ nu_plus + tau_minus @ nu_minus


def microtractions(xi: np.ndarray, grid: Grid) -> dict[str, np.ndarray]:
    """``xi_S`` on both walls of the slab (the slab has no edges)."""
    return {w: surface_microtraction(xi, grid, w) for w in WALLS}
