"""Run configuration: JSON documents validated against a bundled schema."""

from __future__ import annotations

import copy
import difflib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .grid import GridSpec, build_grid
from .physics import PhysParams, Sources
from .solver import BcConfig, Model, StaticEnv, WallBc, stability_dt

DEFAULTS: dict[str, Any] = {
    "grid": {"dim": 2, "extents": [1.0, 1.0], "cells": [32, 32], "wall_axis": -1},
    "params": {
        "eps": 0.05, "delta": 0.05, "iota": 1.0, "beta": 1.0,
        "m_bulk": 1.0, "m_surface": 1.0, "L_phi": 1.0, "L_mu": 1.0,
        "potential_bulk": "double-well", "potential_surface": "double-well",
    },
    "bc": {"phi": "dirichlet", "mu": "robin"},
    "sources": {"gamma": 0.0, "zeta": 0.0, "s_bulk": 0.0, "s_surface": 0.0},
    "initial": {"kind": "noise", "mean": 0.0, "amplitude": 0.05, "seed": 0},
    "time": {"stepper": "explicit", "dt": None, "steps": 100,
             "snapshot_every": 0, "series_every": 1},
    "output": {"dir": "out"},
}

INITIAL_DEFAULTS = {
    "noise": {"mean": 0.0, "amplitude": 0.05},
    "cosine": {"mean": 0.0, "modes": []},
    "file": {},
}

POSITIVE = ("eps", "delta", "iota", "beta", "m_bulk", "m_surface", "L_phi", "L_mu")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


def schema() -> dict:
    text = resources.files("chdyn").joinpath("config.schema.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _initial_defaults(initial: dict) -> dict:
    return {**INITIAL_DEFAULTS.get(initial.get("kind", "noise"), {}), **initial}


def _subschema(root: dict, path) -> dict:
    node = root
    for part in path:
        props = node.get("properties", {})
        if isinstance(part, str) and part in props:
            node = props[part]
        elif isinstance(part, str) and "$ref" not in node and part in node.get("patternProperties", {}):
            node = node["patternProperties"][part]
        else:
            return {}
        if "$ref" in node:
            node = root["$defs"][node["$ref"].split("/")[-1]]
    return node


def _describe(err: jsonschema.ValidationError, root: dict) -> str:
    where = ".".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "additionalProperties":
        known = sorted(_subschema(root, list(err.absolute_path)).get("properties", {}))
        extra = sorted(set(err.instance) - set(known))
        parts = []
        for key in extra:
            near = difflib.get_close_matches(key, known, n=1, cutoff=0.5)
            hint = f" (did you mean '{near[0]}'?)" if near else ""
            parts.append(f"{where}: unknown key '{key}'{hint}")
        return "; ".join(parts)
    if err.validator == "exclusiveMinimum" and err.absolute_path and err.absolute_path[-1] in POSITIVE:
        return (f"{where} = {err.instance}: must be a real positive constant "
                f"(strictly greater than 0)")
    return f"{where}: {err.message}"


def validate(raw: dict) -> list[str]:
    """All violations of ``raw`` (user document, before defaults)."""
    root = schema()
    validator = jsonschema.Draft202012Validator(root)
    errors = sorted(validator.iter_errors(raw), key=lambda e: [str(p) for p in e.absolute_path])
    messages = [_describe(e, root) for e in errors]
    initial = raw.get("initial")
    if isinstance(initial, dict) and initial.get("kind", "noise") == "noise" and "seed" not in initial:
        messages.append("initial.seed: required for noise initial conditions")
    if messages:
        return messages
    cfg = _merge(DEFAULTS, raw)
    if "initial" in raw:
        cfg["initial"] = _initial_defaults(raw["initial"])
    grid_cfg = cfg["grid"]
    dim = grid_cfg["dim"]
    for key in ("extents", "cells"):
        if len(grid_cfg[key]) != dim:
            messages.append(f"grid.{key}: needs {dim} entries, got {len(grid_cfg[key])}")
    if not -dim <= grid_cfg["wall_axis"] < dim:
        messages.append(f"grid.wall_axis: {grid_cfg['wall_axis']} out of range for dim={dim}")
    t = cfg["time"]
    if "T" in t and "steps" in raw.get("time", {}):
        messages.append("time: give either T or steps, not both")
    if cfg["initial"]["kind"] == "cosine":
        for i, mode in enumerate(cfg["initial"].get("modes", [])):
            if len(mode["k"]) != dim:
                messages.append(f"initial.modes.{i}.k: needs {dim} wavenumbers")
    if messages:
        return messages
    try:
        model = build_model(cfg)
    except ValueError as exc:
        return [str(exc)]
    if t["stepper"] == "explicit" and t.get("dt") is not None:
        limit = stability_dt(model.params, model.grid)
        if t["dt"] > limit:
            messages.append(f"time.dt = {t['dt']:.6g} exceeds the explicit stability limit {limit:.6g}")
    return messages


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default resolved."""

    data: dict
    base_dir: Path

    def __getitem__(self, key: str):
        return self.data[key]

    def model(self) -> Model:
        return build_model(self.data)

    @property
    def dt(self) -> float:
        t = self.data["time"]
        if t.get("dt") is not None:
            return float(t["dt"])
        model = self.model()
        return stability_dt(model.params, model.grid)

    @property
    def steps(self) -> int:
        t = self.data["time"]
        if "T" in t:
            return int(round(t["T"] / self.dt))
        return int(t["steps"])

    def resolved(self) -> dict:
        """Config with dt and steps made explicit, as recorded in the manifest."""
        out = copy.deepcopy(self.data)
        out["time"]["dt"] = self.dt
        out["time"]["steps"] = self.steps
        out["time"].pop("T", None)
        return out

    def with_override(self, dotted: str, value) -> "RunConfig":
        data = copy.deepcopy(self.data)
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        return from_dict(_strip_resolved(data), self.base_dir)


def _strip_resolved(data: dict) -> dict:
    data = copy.deepcopy(data)
    if "T" in data.get("time", {}):
        data["time"].pop("steps", None)
    return data


def _wall_bc(cfg: dict, wall: str) -> WallBc:
    bc = cfg["bc"]
    own = bc.get(wall, {})
    static = own.get("static")
    return WallBc(
        phi=own.get("phi", bc["phi"]),
        mu=own.get("mu", bc["mu"]),
        L_phi=own.get("L_phi"),
        L_mu=own.get("L_mu"),
        static=None if static is None else StaticEnv(**static),
    )


def build_model(cfg: dict) -> Model:
    g = cfg["grid"]
    grid = build_grid(GridSpec(g["dim"], tuple(g["extents"]), tuple(g["cells"]), g["wall_axis"]))
    params = PhysParams(**cfg["params"])
    bc = BcConfig(_wall_bc(cfg, "low"), _wall_bc(cfg, "high"))
    sources = Sources(**cfg["sources"])
    return Model(grid, params, bc, sources)


def from_dict(raw: dict, base_dir: Path | str = ".") -> RunConfig:
    errors = validate(raw)
    if errors:
        raise ConfigError(errors)
    data = _merge(DEFAULTS, raw)
    if "initial" in raw:
        data["initial"] = _initial_defaults(raw["initial"])
    if "T" in data["time"] and "steps" not in raw.get("time", {}):
        data["time"].pop("steps", None)
    return RunConfig(data, Path(base_dir))


def parse_config(path: str | Path | None) -> RunConfig:
    """Load and validate a JSON config; ``None`` gives the defaults."""
    if path is None:
        return from_dict({})
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return from_dict(raw, path.parent)
