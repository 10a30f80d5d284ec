import csv
import json

import numpy as np
import pytest

from chdyn import cli, io
from chdyn.config import DEFAULTS, ConfigError, from_dict, parse_config, validate
from chdyn.grid import build_grid
from chdyn.solver import stability_dt

SMALL = {
    "grid": {"dim": 2, "extents": [1.0, 1.0], "cells": [12, 12], "wall_axis": 1},
    "params": {"eps": 0.15, "delta": 0.15},
    "initial": {"kind": "noise", "amplitude": 0.1, "seed": 5},
    "time": {"steps": 20, "snapshot_every": 10},
}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


# -- configuration --------------------------------------------------------------------

def test_defaults_are_filled():
    cfg = from_dict({"initial": {"kind": "noise", "seed": 1}})
    assert cfg["params"] == DEFAULTS["params"]
    assert cfg["initial"]["amplitude"] == 0.05
    assert cfg.steps == 100
    model = cfg.model()
    assert cfg.resolved()["time"]["dt"] == stability_dt(model.params, model.grid)


def test_default_document_is_valid():
    assert validate({}) == []
    assert parse_config(None).steps == DEFAULTS["time"]["steps"]


def test_negative_parameter_message():
    errors = validate({"params": {"eps": -1.0}})
    assert any("params.eps" in e and "real positive constant" in e for e in errors)


def test_unknown_key_suggests_nearest():
    errors = validate({"params": {"epsilon": 0.1}})
    assert any("unknown key 'epsilon'" in e and "did you mean 'eps'" in e for e in errors)


def test_missing_seed_reported_alongside_other_errors():
    errors = validate({"initial": {"kind": "noise"}, "params": {"delta": 0}})
    assert any("seed" in e for e in errors)
    assert any("params.delta" in e for e in errors)


def test_structural_checks():
    errors = validate({"grid": {"dim": 3, "extents": [1, 1], "cells": [8, 8, 8]}})
    assert any("grid.extents" in e for e in errors)
    errors = validate({"time": {"T": 1.0, "steps": 3}})
    assert any("either T or steps" in e for e in errors)


def test_explicit_dt_above_limit_rejected():
    errors = validate({"time": {"dt": 1.0}})
    assert any("stability limit" in e for e in errors)
    assert validate({"time": {"dt": 1.0, "stepper": "semi-implicit"}}) == []


def test_final_time_sets_step_count():
    cfg = from_dict({"time": {"T": 1e-6, "dt": 1e-8}})
    assert cfg.steps == 100
    assert cfg.resolved()["time"]["steps"] == 100 and "T" not in cfg.resolved()["time"]


def test_override_revalidates():
    cfg = from_dict(SMALL)
    assert cfg.with_override("params.L_mu", 0.5)["params"]["L_mu"] == 0.5
    with pytest.raises(ConfigError, match="real positive constant"):
        cfg.with_override("params.L_mu", 0.0)


def test_static_wall_config():
    cfg = from_dict({**SMALL, "bc": {"phi": "dirichlet", "mu": "robin",
                                     "high": {"static": {"xi": 0.0, "j": 0.0}}}})
    model = cfg.model()
    assert model.dynamic_walls == ("low",)


# -- io ----------------------------------------------------------------------------------

def test_vtk_round_trip(tmp_path):
    g = build_grid(dim=3, extents=(1.0, 1.0, 1.0), cells=(4, 5, 6), wall_axis=2)
    phi = np.random.default_rng(0).normal(size=g.shape)
    io.write_vtk(tmp_path / "f.vtk", g, {"phi": phi})
    np.testing.assert_array_equal(io.read_vtk(tmp_path / "f.vtk")["phi"].reshape(g.shape, order="F"), phi)


def test_series_writer_round_trip(tmp_path):
    cols = ("t", "energy_total")
    with io.SeriesWriter(tmp_path / "s.csv", cols) as w:
        w({"t": 0.1, "energy_total": 1 / 3})
    rows = io.read_series(tmp_path / "s.csv")
    assert rows == [{"t": 0.1, "energy_total": 1 / 3}]


# -- command line ---------------------------------------------------------------------------

def test_check_default_suite_passes(capsys):
    assert cli.main(["check", "--quiet"]) == 0


def test_run_writes_outputs(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out), "--quiet"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "completed"
    assert manifest["config"]["time"]["steps"] == 20
    series = io.read_series(out / "series.csv")
    assert len(series) == 21
    assert all(r["decay_violation"] == 0.0 for r in series)
    assert sorted(p.name for p in (out / "snapshots").glob("bulk_*.vtk")) == [
        "bulk_00000000.vtk", "bulk_00000010.vtk", "bulk_00000020.vtk"]
    assert (out / "snapshots" / "surface_low_00000020.csv").is_file()
    assert np.load(out / "final_phi.npy").shape == (12, 12)


def test_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    for name in ("a", "b"):
        assert cli.main(["run", str(cfg), "--out", str(tmp_path / name), "--quiet"]) == 0
    assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {"eps": -1}})
    assert cli.main(["run", str(cfg), "--quiet"]) == 1
    assert "real positive constant" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1


def test_numerical_failure_keeps_partial_output(tmp_path, capsys):
    g = build_grid(dim=2, extents=(1.0, 1.0), cells=(12, 12), wall_axis=1)
    phi = np.full(g.shape, 1e60)
    phi[::2] *= -1
    np.save(tmp_path / "phi.npy", phi)
    data = {**SMALL, "initial": {"kind": "file", "path": "phi.npy"}}
    cfg = write_config(tmp_path, data)
    out = tmp_path / "out"
    with np.errstate(all="ignore"):
        code = cli.main(["run", str(cfg), "--out", str(out), "--quiet"])
    assert code == 2
    assert "non-finite" in capsys.readouterr().err
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed" and "cell" in manifest["error"]
    assert len(io.read_series(out / "series.csv")) >= 1
    assert (out / "snapshots" / "bulk_00000000.vtk").is_file()


def test_sweep_distance_decreases_with_robin_coefficient(tmp_path):
    data = {**SMALL, "bc": {"phi": "dirichlet", "mu": "robin"}, "time": {"steps": 40}}
    cfg = write_config(tmp_path, data)
    out = tmp_path / "sweep"
    code = cli.main(["sweep", str(cfg), "--vary", "L_mu=1.0,0.1,0.01", "--out", str(out), "--quiet"])
    assert code == 0
    with open(out / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    dist = [float(r["distance_to_reference"]) for r in rows]
    assert dist[0] > dist[1] > dist[2]
    assert (out / "reference" / "manifest.json").is_file()


def test_sweep_needs_vary(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["sweep", str(cfg), "--quiet"]) == 1


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["sweep", str(cfg), "--vary", "beta=1,2", "--out", str(tmp_path / "s"), "--quiet"]) == 1
