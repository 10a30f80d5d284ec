"""Invariant suite run by ``chdyn check``.

Each check returns a :class:`CheckResult`; the error-sequence helpers are
public so tests can reuse the same analytic fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import calculus, diagnostics
from .calculus import converges_at, observed_orders
from .config import RunConfig
from .grid import build_grid
from .solver import BcConfig, Model, WallBc, initial_state, stability_dt, step_explicit

TWO_PI = 2.0 * np.pi
SPHERE_BAND = 0.6   # colatitude margin for interior-band sphere errors


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _slab(n: int):
    return build_grid(dim=2, extents=(1.0, 1.0), cells=(n, n), wall_axis=1)


def operator_errors(ns=(16, 32, 64, 128)) -> dict[str, list[float]]:
    """Max-norm errors of every discrete operator on analytic fields."""
    out: dict[str, list[float]] = {}

    def add(key, value):
        out.setdefault(key, []).append(float(value))

    for n in ns:
        g = _slab(n)
        x, z = g.mesh
        f = np.sin(TWO_PI * x) * np.cos(1.3 * z) + z ** 3
        lap = -(TWO_PI ** 2 + 1.69) * np.sin(TWO_PI * x) * np.cos(1.3 * z) + 6.0 * z
        add("laplacian", np.abs(calculus.laplacian(f, g) - lap).max())
        grad = calculus.gradient(f, g)
        add("gradient", max(
            np.abs(grad[0] - TWO_PI * np.cos(TWO_PI * x) * np.cos(1.3 * z)).max(),
            np.abs(grad[1] - (-1.3 * np.sin(TWO_PI * x) * np.sin(1.3 * z) + 3 * z ** 2)).max()))
        nd = 0.0
        for wall, sign in (("low", -1.0), ("high", 1.0)):
            xs = g.wall_mesh(wall)[0]
            zw = g.wall_position(wall)
            exact = sign * (-1.3 * np.sin(TWO_PI * xs) * np.sin(1.3 * zw) + 3 * zw ** 2)
            nd = max(nd, np.abs(calculus.normal_derivative(f, g, wall) - exact).max())
        add("normal_derivative", nd)

        xs = g.wall_mesh("low")[0]
        fs = np.cos(TWO_PI * xs)
        add("surface_gradient", np.abs(calculus.surface_gradient(fs, g)[0]
                                       + TWO_PI * np.sin(TWO_PI * xs)).max())
        v = np.zeros((2,) + fs.shape)
        v[0] = np.sin(TWO_PI * xs)
        add("surface_divergence", np.abs(calculus.surface_divergence(v, g)
                                         - TWO_PI * np.cos(TWO_PI * xs)).max())
        add("laplace_beltrami", np.abs(calculus.laplace_beltrami(fs, g) + TWO_PI ** 2 * fs).max())

        patch = calculus.sphere_patch(n)
        zc = patch.position[..., 2]
        band = np.abs(patch.params[0][:, None] - np.pi / 2) <= np.pi / 2 - SPHERE_BAND
        band = np.broadcast_to(band, zc.shape)
        exact_grad = np.array([0.0, 0.0, 1.0]) - zc[..., None] * patch.normal
        add("sphere_gradient", np.abs(patch.gradient(zc) - exact_grad)[band].max())
        add("sphere_divergence", np.abs(patch.divergence(patch.normal) - 2.0)[band].max())
        add("sphere_laplace_beltrami", np.abs(patch.laplace_beltrami(zc) + 2.0 * zc)[band].max())
    return out


def cube_kappa_x(n: int) -> tuple[float, float]:
    return calculus.check_closed_surface_divergence(lambda p: p, calculus.unit_cube_edges(n))


def curvature_split_errors(ns=(32, 64, 128, 256), which: str = "ez") -> list[float]:
    errs = []
    for n in ns:
        patch = calculus.sphere_patch(n)
        if which == "ez":
            v = np.broadcast_to(np.array([0.0, 0.0, 1.0]), patch.position.shape)
        else:
            v = patch.normal
        errs.append(float(np.abs(calculus.check_curvature_split(patch, v)).max()))
    return errs


def _orders(errs) -> str:
    return " ".join(f"{o:.2f}" for o in observed_orders(errs))


def check_operators() -> list[CheckResult]:
    out = []
    for name, errs in operator_errors().items():
        out.append(CheckResult(f"convergence:{name}", converges_at(errs, 1.9),
                               f"orders {_orders(errs)}"))
    return out


def check_divergence_theorems() -> list[CheckResult]:
    lhs, rhs = cube_kappa_x(64)
    ok = abs(lhs - 12) <= 0.24 and abs(rhs - 12) <= 0.24
    res = [CheckResult("cube:kappa=x", ok, f"lhs {lhs:.6g} rhs {rhs:.6g}")]
    c = np.array([0.3, -1.2, 0.7])
    lc, rc = calculus.check_closed_surface_divergence(
        lambda p: np.broadcast_to(c, p.shape), calculus.unit_cube_edges(32))
    res.append(CheckResult("cube:kappa=const", max(abs(lc), abs(rc)) <= 1e-10,
                           f"lhs {lc:.2e} rhs {rc:.2e}"))

    def kappa(p):
        return np.stack([np.sin(p[..., 0] + p[..., 1]), p[..., 2] ** 2, np.cos(p[..., 0])], axis=-1)

    gaps = []
    for n in (64, 128, 256):
        lhs, rhs = calculus.check_closed_surface_divergence(kappa, calculus.unit_cube_edges(n))
        gaps.append(abs(lhs - rhs) / max(1.0, abs(lhs)))
    res.append(CheckResult("cube:smooth-kappa", converges_at(gaps, 1.9), f"orders {_orders(gaps)}"))
    gaps = []
    for n in (64, 128, 256):
        lhs, rhs = calculus.check_open_surface_divergence(kappa, calculus.cube_face(2, 1, n))
        gaps.append(abs(lhs - rhs))
    res.append(CheckResult("open-face", converges_at(gaps, 1.9), f"orders {_orders(gaps)}"))
    return res


def check_curvature_split() -> list[CheckResult]:
    ez = curvature_split_errors(which="ez")
    vn = curvature_split_errors(ns=(128,), which="n")[0]
    return [
        CheckResult("curvature-split:e_z", converges_at(ez, 1.9), f"orders {_orders(ez)}"),
        CheckResult("curvature-split:n", vn <= 1e-10, f"residual {vn:.2e}"),
    ]


def _combos():
    for phi in ("dirichlet", "robin"):
        for mu in ("dirichlet", "robin"):
            yield phi, mu


def check_dynamics(cfg: RunConfig, steps: int = 200) -> list[CheckResult]:
    """Conservation, decay and residuals on the configured grid, zero sources."""
    base = cfg.model()
    base = replace(base, sources=type(base.sources)())
    dt = stability_dt(base.params, base.grid)
    rng = np.random.default_rng(0)
    phi0 = 0.05 * rng.uniform(-1.0, 1.0, base.grid.shape)
    out = []
    for phi_kind, mu_kind in _combos():
        model = replace(base, bc=BcConfig.uniform(phi_kind, mu_kind))
        state = initial_state(model, phi0)
        s0 = diagnostics.total_species(state, model.grid, model.params.beta)
        e_prev = diagnostics.free_energy(model, state).total
        bad = 0
        drift = 0.0
        for _ in range(steps):
            state = step_explicit(model, state, dt)
            e = diagnostics.free_energy(model, state).total
            bad += e - e_prev > 1e-12 * max(1.0, abs(e_prev))
            e_prev = e
            s = diagnostics.total_species(state, model.grid, model.params.beta)
            drift = max(drift, abs(s - s0) / max(1.0, abs(s0)))
        tag = f"{phi_kind}/{mu_kind}"
        out.append(CheckResult(f"conservation:{tag}", drift <= 1e-12, f"drift {drift:.2e}"))
        out.append(CheckResult(f"decay:{tag}", bad == 0, f"{bad} increasing steps"))
        rb, rs = diagnostics.consistency_residuals(model, state)
        out.append(CheckResult(f"residuals:{tag}", max(rb, rs) <= 1e-12,
                               f"bulk {rb:.1e} surface {rs:.1e}"))
    return out


def bc_limit_distances(model: Model, phi0: np.ndarray, steps: int, which: str,
                       values=(1.0, 0.1, 0.01, 0.001), phi_s0=None) -> list[float]:
    """Final-state max-norm distance of Robin runs from the Dirichlet run.

    ``which`` is ``"mu"`` or ``"phi"``; the other condition is held at the
    model's setting for both walls.
    """
    dt = stability_dt(model.params, model.grid)

    def final(bc: BcConfig):
        m = replace(model, bc=bc)
        s = initial_state(m, phi0, phi_s0)
        for _ in range(steps):
            s = step_explicit(m, s, dt)
        return s

    other = model.bc.low
    if which == "mu":
        ref = final(BcConfig(replace(other, mu="dirichlet"), replace(other, mu="dirichlet")))
    else:
        ref = final(BcConfig(replace(other, phi="dirichlet"), replace(other, phi="dirichlet")))
    dists = []
    for L in values:
        if which == "mu":
            wall = replace(other, mu="robin", L_mu=L)
        else:
            wall = replace(other, phi="robin", L_phi=L)
        s = final(BcConfig(wall, wall))
        d = np.abs(s.phi - ref.phi).max()
        for w in s.phi_s:
            d = max(d, np.abs(s.phi_s[w] - ref.phi_s[w]).max())
        dists.append(float(d))
    return dists


def smooth_field(grid) -> np.ndarray:
    x, z = grid.mesh[0], grid.mesh[grid.wall_axis]
    return 0.4 * np.cos(TWO_PI * x) * np.cos(np.pi * z) + 0.2 * np.sin(TWO_PI * z)


def check_bc_limits(steps: int = 300) -> list[CheckResult]:
    g = _slab(24)
    from .physics import PhysParams
    model = Model(g, PhysParams(eps=0.08, delta=0.08), BcConfig(WallBc(), WallBc()))
    phi0 = smooth_field(g)
    out = []
    for which, fixed in (("mu", WallBc(phi="dirichlet")), ("phi", WallBc(mu="robin", L_mu=0.1))):
        m = replace(model, bc=BcConfig(fixed, fixed))
        d = bc_limit_distances(m, phi0, steps, which)
        mono = all(b < a for a, b in zip(d, d[1:]))
        out.append(CheckResult(f"bc-limit:{which}", mono, " ".join(f"{x:.2e}" for x in d)))
    return out


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "operators": check_operators,
    "divergence-theorems": check_divergence_theorems,
    "curvature-split": check_curvature_split,
    "bc-limits": check_bc_limits,
}


def run_suite(cfg: RunConfig) -> list[CheckResult]:
    results = []
    for fn in SUITES.values():
        results.extend(fn())
    results.extend(check_dynamics(cfg))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} passed")
    return "\n".join(lines)
