"""Time integration of the coupled bulk/surface species balances.

Discretization summary (cell-centered, flux form):

* Each wall carries a trace value ``theta`` of the bulk phase field.  The
  bulk is closed with the ghost layer ``2 theta - phi_adj`` and the outward
  normal derivative is ``dn phi = 2 (theta - phi_adj) / h``.  For a Dirichlet
  wall the trace is the surface field itself; for a Robin wall it is a state
  variable relaxed by ``theta' = phi_s' - L_phi eps dn phi``, which is the
  mixed condition ``eps dn phi = (phi_s' - theta') / L_phi`` solved for the
  trace rate.
* The bulk normal flux through a wall, ``F = j . n``, is computed once per
  step and consumed by both balances: the bulk loses ``F`` and the surface
  gains ``beta F``.  With a half-cell between the adjacent cell center and the
  wall, Robin and Dirichlet chemical-potential walls share one formula,
  ``F = -(beta mu_s - mu_adj) / (L_mu + h / (2 m))`` with ``L_mu = 0`` for
  Dirichlet.
* The semi-discrete system is an exact gradient flow of the discrete energy
  in :mod:`chdyn.diagnostics`, so forward Euler inside its stability limit
  decreases that energy and conserves ``beta * bulk + surface`` to round-off.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from . import calculus, physics
from .grid import WALLS, Grid
from .physics import PhysParams, Sources

logger = logging.getLogger(__name__)

PHI_KINDS = ("dirichlet", "robin")
MU_KINDS = ("dirichlet", "robin")


class SolverError(RuntimeError):
    """Numerical failure during stepping."""


class BlowUpError(SolverError):
    pass


class LinearSolveError(SolverError):
    pass


@dataclass(frozen=True)
class StaticEnv:
    """Static-environment wall: one phase-field and one species condition.

    ``phi`` (assigned trace) or ``xi`` (assigned microtraction ``eps dn phi``);
    ``mu`` (assigned chemical potential) or ``j`` (assigned inflow, ``j.n = -j``).
    """

    phi: float | None = None
    xi: float | None = None
    mu: float | None = None
    j: float | None = None

    def __post_init__(self):
        if (self.phi is None) == (self.xi is None):
            raise ValueError("static wall needs exactly one of phi / xi")
        if (self.mu is None) == (self.j is None):
            raise ValueError("static wall needs exactly one of mu / j")


@dataclass(frozen=True)
class WallBc:
    phi: str = "dirichlet"
    mu: str = "robin"
    L_phi: float | None = None
    L_mu: float | None = None
    static: StaticEnv | None = None

    def __post_init__(self):
        if self.phi not in PHI_KINDS:
            raise ValueError(f"phi condition must be one of {PHI_KINDS}, got {self.phi!r}")
        if self.mu not in MU_KINDS:
            raise ValueError(f"mu condition must be one of {MU_KINDS}, got {self.mu!r}")
        for name in ("L_phi", "L_mu"):
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def dynamic(self) -> bool:
        return self.static is None


@dataclass(frozen=True)
class BcConfig:
    low: WallBc = field(default_factory=WallBc)
    high: WallBc = field(default_factory=WallBc)

    def __getitem__(self, wall: str) -> WallBc:
        if wall not in WALLS:
            raise KeyError(wall)
        return getattr(self, wall)

    @classmethod
    def uniform(cls, phi: str = "dirichlet", mu: str = "robin", **kw) -> "BcConfig":
        return cls(WallBc(phi, mu, **kw), WallBc(phi, mu, **kw))

    def mirrored(self) -> "BcConfig":
        return BcConfig(self.high, self.low)


@dataclass(frozen=True)
class Model:
    grid: Grid
    params: PhysParams
    bc: BcConfig = field(default_factory=BcConfig)
    sources: Sources = field(default_factory=Sources)

    def L_phi(self, wall: str) -> float:
        v = self.bc[wall].L_phi
        return self.params.L_phi if v is None else v

    def L_mu(self, wall: str) -> float:
        v = self.bc[wall].L_mu
        return self.params.L_mu if v is None else v

    @property
    def dynamic_walls(self) -> tuple[str, ...]:
        return tuple(w for w in WALLS if self.bc[w].dynamic)

    def robin_phi_walls(self) -> tuple[str, ...]:
        return tuple(w for w in self.dynamic_walls if self.bc[w].phi == "robin")


@dataclass
class SimState:
    """Evolving unknowns plus caches derived from them.

    ``phi_s`` holds the surface phase field of every dynamic wall, ``trace``
    the bulk trace of every Robin phase-field wall.  The caches (``mu``,
    ``mu_s``, ``flux``, ``dn_phi``) are consistent with the fields after
    :func:`refresh`; ``rates`` holds the time derivatives used by the step
    that produced this state (``None`` for an initial state).
    """

    t: float
    phi: np.ndarray
    phi_s: dict[str, np.ndarray]
    trace: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    mu: np.ndarray | None = None
    mu_s: dict[str, np.ndarray] = field(default_factory=dict)
    flux: dict[str, np.ndarray] = field(default_factory=dict)
    dn_phi: dict[str, np.ndarray] = field(default_factory=dict)
    rates: dict | None = None

    def copy(self) -> "SimState":
        return SimState(
            self.t, self.phi.copy(), {w: v.copy() for w, v in self.phi_s.items()},
            {w: v.copy() for w, v in self.trace.items()}, self.step,
            None if self.mu is None else self.mu.copy(),
            {w: v.copy() for w, v in self.mu_s.items()},
            {w: v.copy() for w, v in self.flux.items()},
            {w: v.copy() for w, v in self.dn_phi.items()},
            None if self.rates is None else dict(self.rates),
        )


# -- closures -------------------------------------------------------------------

def wall_trace(model: Model, state: SimState, wall: str) -> np.ndarray:
    """Bulk phase-field value on ``wall`` implied by the active condition."""
    bc = model.bc[wall]
    grid = model.grid
    if bc.static is not None:
        if bc.static.phi is not None:
            return np.full(grid.wall_shape, float(bc.static.phi))
        adj = grid.adjacent_layer(state.phi, wall)
        return adj + 0.5 * grid.h_wall * bc.static.xi / model.params.eps
    if bc.phi == "dirichlet":
        return state.phi_s[wall]
    return state.trace[wall]


def phi_wall_closure(model: Model, state: SimState, wall: str) -> np.ndarray:
    """Ghost layer for the bulk phase field beyond ``wall``.

    The ghost is the linear reflection through the trace, so the discrete
    trace ``(ghost + phi_adj) / 2`` equals the imposed or evolved trace.
    """
    adj = model.grid.adjacent_layer(state.phi, wall)
    return 2.0 * wall_trace(model, state, wall) - adj


def phi_normal_derivative(model: Model, state: SimState, wall: str) -> np.ndarray:
    """Outward ``dn phi`` across the half cell between trace and adjacent center."""
    adj = model.grid.adjacent_layer(state.phi, wall)
    return 2.0 * (wall_trace(model, state, wall) - adj) / model.grid.h_wall


def robin_flux(disequilibrium, L_mu: float):
    """``j.n = -(beta mu_s - mu_P) / L_mu`` for a given ``beta mu_s - mu_P``."""
    return -np.asarray(disequilibrium, dtype=float) / L_mu


def wall_flux(model: Model, state: SimState, wall: str) -> np.ndarray:
    """Outward bulk species flux ``F = j_P . n`` through ``wall``.

    Requires ``state.mu`` and ``state.mu_s`` to be current.
    """
    bc = model.bc[wall]
    grid = model.grid
    p = model.params
    mu_adj = grid.adjacent_layer(state.mu, wall)
    half = grid.h_wall / (2.0 * p.m_bulk)
    if bc.static is not None:
        if bc.static.j is not None:
            return np.full(grid.wall_shape, -float(bc.static.j))
        return -(float(bc.static.mu) - mu_adj) / half
    L = model.L_mu(wall) if bc.mu == "robin" else 0.0
    return -(p.beta * state.mu_s[wall] - mu_adj) / (L + half)


def mu_wall_trace(model: Model, state: SimState, wall: str) -> np.ndarray:
    """Bulk chemical potential on the wall consistent with the wall flux."""
    mu_adj = model.grid.adjacent_layer(state.mu, wall)
    return mu_adj - state.flux[wall] * model.grid.h_wall / (2.0 * model.params.m_bulk)


def refresh(model: Model, state: SimState) -> SimState:
    """Recompute chemical potentials and wall fluxes in place; returns ``state``."""
    grid, p, src = model.grid, model.params, model.sources
    ghosts = {w: phi_wall_closure(model, state, w) for w in WALLS}
    state.dn_phi = {w: phi_normal_derivative(model, state, w) for w in WALLS}
    state.mu = physics.bulk_chemical_potential(state.phi, src.bulk("gamma", grid), grid, p, ghosts)
    state.mu_s = {
        w: physics.surface_chemical_potential(
            state.phi_s[w], state.phi, src.surface("zeta", grid, w), grid, p, w,
            dn_phi=state.dn_phi[w])
        for w in model.dynamic_walls
    }
    state.flux = {w: wall_flux(model, state, w) for w in WALLS}
    return state


# -- right-hand sides -------------------------------------------------------------

def bulk_flux_faces(model: Model, state: SimState) -> list[np.ndarray]:
    """Face species fluxes ``-m dmu/dn``; the two wall faces carry ``wall_flux``."""
    grid = model.grid
    a = grid.wall_axis
    faces = []
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        if axis == a:
            inner = -model.params.m_bulk * np.diff(state.mu, axis=a) / h
            low = np.expand_dims(-state.flux["low"], a)     # outward is -e_a
            high = np.expand_dims(state.flux["high"], a)
            faces.append(np.concatenate([low, inner, high], axis=a))
        else:
            faces.append(-model.params.m_bulk * (np.roll(state.mu, -1, axis=axis) - state.mu) / h)
    return faces


def bulk_rhs(model: Model, state: SimState) -> np.ndarray:
    """``phi' = s_P - div j_P`` assembled from face fluxes."""
    div_j = calculus.face_divergence(bulk_flux_faces(model, state), model.grid)
    return model.sources.bulk("s_bulk", model.grid) - div_j


def surface_rhs(model: Model, state: SimState, wall: str) -> np.ndarray:
    """``phi_s' = s_dP + m_dP Lap_S mu_s + beta F`` with the shared wall flux."""
    grid, p = model.grid, model.params
    lap = calculus.wall_face_divergence(calculus.wall_face_gradient(state.mu_s[wall], grid), grid)
    return (model.sources.surface("s_surface", grid, wall) + p.m_surface * lap
            + p.beta * state.flux[wall])


def trace_rhs(model: Model, state: SimState, wall: str, phi_s_rate: np.ndarray) -> np.ndarray:
    """Robin trace rate ``theta' = phi_s' - L_phi eps dn phi``."""
    return phi_s_rate - model.L_phi(wall) * model.params.eps * state.dn_phi[wall]


def rates(model: Model, state: SimState) -> dict:
    if state.mu is None:
        refresh(model, state)
    phi_rate = bulk_rhs(model, state)
    phi_s_rate = {w: surface_rhs(model, state, w) for w in model.dynamic_walls}
    trace_rate = {w: trace_rhs(model, state, w, phi_s_rate[w]) for w in model.robin_phi_walls()}
    return {"phi": phi_rate, "phi_s": phi_s_rate, "trace": trace_rate}


# -- time stepping ----------------------------------------------------------------

def stability_dt(params: PhysParams, grid: Grid, safety: float = 0.8) -> float:
    """Forward-Euler limit of the fourth-order terms, bulk and surface."""
    d = grid.dim
    h = min(grid.spacing)
    dt_bulk = safety * h ** 4 / (8.0 * d ** 2 * params.m_bulk * params.eps)
    hs = min(grid.spacing[a] for a in grid.lateral_axes)
    dt_surf = safety * hs ** 4 / (8.0 * (d - 1) ** 2 * params.m_surface * params.iota * params.delta)
    return min(dt_bulk, dt_surf)


def _check_finite(state: SimState) -> None:
    fields = [("phi", state.phi)]
    fields += [(f"phi_s[{w}]", v) for w, v in state.phi_s.items()]
    fields += [(f"trace[{w}]", v) for w, v in state.trace.items()]
    for name, arr in fields:
        bad = ~np.isfinite(arr)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise BlowUpError(
                f"non-finite {name} at cell {idx} after step {state.step} (t={state.t:.6g})")


def _advance(model: Model, state: SimState, dt: float, r: dict) -> SimState:
    new = SimState(
        t=state.t + dt,
        phi=state.phi + dt * r["phi"],
        phi_s={w: state.phi_s[w] + dt * r["phi_s"][w] for w in state.phi_s},
        trace={w: state.trace[w] + dt * r["trace"][w] for w in state.trace},
        step=state.step + 1,
        rates=r,
    )
    _check_finite(new)
    return refresh(model, new)


def step_explicit(model: Model, state: SimState, dt: float) -> SimState:
    """One forward-Euler step; returns a new state with refreshed caches."""
    return _advance(model, state, dt, rates(model, state))


def _periodic_1d(n: int, h: float) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    m = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    m[0, n - 1] = 1.0
    m[n - 1, 0] = 1.0
    return (m / h ** 2).tocsr()


def _neumann_1d(n: int, h: float) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return (sp.diags([off, main, off], [-1, 0, 1]) / h ** 2).tocsr()


def _kron_laplacian(ops: list[sp.csr_matrix]) -> sp.csr_matrix:
    """Sum of 1D operators acting along each axis of a C-ordered array."""
    sizes = [op.shape[0] for op in ops]
    total = None
    for k, op in enumerate(ops):
        left = sp.identity(int(np.prod(sizes[:k])), format="csr")
        right = sp.identity(int(np.prod(sizes[k + 1:])), format="csr")
        term = sp.kron(sp.kron(left, op), right, format="csr")
        total = term if total is None else total + term
    return total.tocsr()


@dataclass
class SemiImplicitOperators:
    """Stiff linear parts, ``I - dt m D (-k D + S)`` for bulk and walls."""

    bulk: sp.csr_matrix
    surface: sp.csr_matrix
    dt: float


_OPERATOR_CACHE: dict = {}


def semi_implicit_operators(model: Model, dt: float) -> SemiImplicitOperators:
    key = (id(model), dt)
    cached = _OPERATOR_CACHE.get(key)
    if cached is not None and cached[0] is model:
        return cached[1]
    grid, p = model.grid, model.params
    ops = [
        _neumann_1d(n, h) if a == grid.wall_axis else _periodic_1d(n, h)
        for a, (n, h) in enumerate(zip(grid.shape, grid.spacing))
    ]
    D = _kron_laplacian(ops)
    eye = sp.identity(D.shape[0], format="csr")
    S_b = physics.potential_curvature_bound(p.potential_bulk) / p.eps
    A_b = eye - dt * p.m_bulk * (D @ (-p.eps * D + S_b * eye))
    ops_s = [_periodic_1d(grid.shape[a], grid.spacing[a]) for a in grid.lateral_axes]
    Ds = _kron_laplacian(ops_s)
    eye_s = sp.identity(Ds.shape[0], format="csr")
    S_s = physics.potential_curvature_bound(p.potential_surface) / p.delta
    A_s = eye_s - dt * p.m_surface * (Ds @ (-p.iota * p.delta * Ds + S_s * eye_s))
    out = SemiImplicitOperators(A_b.tocsr(), A_s.tocsr(), dt)
    _OPERATOR_CACHE.clear()
    _OPERATOR_CACHE[key] = (model, out)
    return out


def _conservative_solve(A: sp.csr_matrix, b: np.ndarray, what: str,
                        rtol: float = 1e-13, maxiter: int = 5000) -> np.ndarray:
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = cg(A, b, rtol=rtol, atol=0.0, maxiter=maxiter, callback=count)
    if info != 0:
        raise LinearSolveError(
            f"{what} linear solve did not converge after {iterations} iterations (info={info})")
    # A has zero column sums apart from the identity, so sum(x) must equal sum(b)
    x += (np.sum(b) - np.sum(x)) / x.size
    return x


def step_semi_implicit(model: Model, state: SimState, dt: float) -> SimState:
    """Linearly stabilized step: explicit rates, implicit stiff correction.

    Solves ``(I - dt L) u = dt r`` with ``L = m D(-eps D + S/eps)`` on the
    zero-flux lattice Laplacian ``D``, then sets ``phi += u``.  The update has
    the same mass as the explicit one and reduces to it as ``dt -> 0``.
    """
    ops = semi_implicit_operators(model, dt)
    r = rates(model, state)
    grid = model.grid
    du = _conservative_solve(ops.bulk, dt * r["phi"].ravel(), "bulk").reshape(grid.shape)
    new_r = {"phi": du / dt, "phi_s": {}, "trace": {}}
    for w in model.dynamic_walls:
        dus = _conservative_solve(ops.surface, dt * r["phi_s"][w].ravel(), f"surface[{w}]")
        new_r["phi_s"][w] = dus.reshape(grid.wall_shape) / dt
    for w in model.robin_phi_walls():
        new_r["trace"][w] = trace_rhs(model, state, w, new_r["phi_s"][w])
    return _advance(model, state, dt, new_r)


STEPPERS = {"explicit": step_explicit, "semi-implicit": step_semi_implicit}


def initial_state(model: Model, phi: np.ndarray, phi_s: Mapping[str, np.ndarray] | None = None,
                  trace: Mapping[str, np.ndarray] | None = None, t: float = 0.0) -> SimState:
    """Assemble a consistent state.

    Surface fields default to the adjacent bulk layer; Robin traces default
    to the surface field.
    """
    grid = model.grid
    phi = grid.check_bulk(phi, "phi").copy()
    phi_s = dict(phi_s or {})
    trace = dict(trace or {})
    surf = {}
    for w in model.dynamic_walls:
        v = phi_s.get(w)
        surf[w] = grid.adjacent_layer(phi, w).copy() if v is None else grid.check_surface(v, w).copy()
    tr = {}
    for w in model.robin_phi_walls():
        v = trace.get(w)
        tr[w] = surf[w].copy() if v is None else grid.check_surface(v, w).copy()
    state = SimState(t, phi, surf, tr)
    _check_finite(state)
    return refresh(model, state)


def mirror_state(model: Model, state: SimState) -> SimState:
    """Reflect across the slab midplane, swapping the two walls."""
    a = model.grid.wall_axis
    swap = {"low": "high", "high": "low"}
    return SimState(
        state.t, np.flip(state.phi, axis=a).copy(),
        {swap[w]: v.copy() for w, v in state.phi_s.items()},
        {swap[w]: v.copy() for w, v in state.trace.items()},
        state.step,
    )


def mirrored_model(model: Model) -> Model:
    return replace(model, bc=model.bc.mirrored())
