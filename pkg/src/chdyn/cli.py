"""Command-line entry point: ``chdyn run | check | sweep``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 invariant-suite failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, checks, diagnostics
from .config import ConfigError, RunConfig, parse_config
from .io import SeriesWriter, SnapshotWriter, write_manifest, write_rows
from .runner import make_initial_state, run
from .solver import SolverError, stability_dt

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
THREADS_ENV = "CHDYN_THREADS"

SWEEP_ALIASES = {
    "L_phi": "params.L_phi",
    "L_mu": "params.L_mu",
    "beta": "params.beta",
    "phi": "bc.phi",
    "mu": "bc.mu",
}

log = logging.getLogger("chdyn")


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError([f"{THREADS_ENV}={raw!r} is not an integer"]) from None


def execute(cfg: RunConfig, out: Path) -> dict:
    """Run one configuration into ``out``; returns a summary row.

    The manifest is written first and rewritten with the outcome, so a failed
    run still leaves its resolved parameters, the series so far and every
    snapshot taken before the failure.
    """
    out.mkdir(parents=True, exist_ok=True)
    model = cfg.model()
    resolved = cfg.resolved()
    extra = {"version": __version__, "stability_dt": stability_dt(model.params, model.grid)}
    write_manifest(out / "manifest.json", resolved, {**extra, "status": "running"})
    state = make_initial_state(model, cfg["initial"], cfg.base_dir)
    t = cfg["time"]
    snaps = SnapshotWriter(out / "snapshots", model)
    with SeriesWriter(out / "series.csv") as series:
        try:
            traj = run(model, state, cfg.dt, cfg.steps, t["stepper"],
                       snapshot_every=t["snapshot_every"], series_every=t["series_every"],
                       on_snapshot=snaps, on_record=series, keep_snapshots=False)
        except SolverError as exc:
            write_manifest(out / "manifest.json", resolved,
                           {**extra, "status": "failed", "error": str(exc)})
            raise
    report = traj.decay_report()
    summary = {
        "final_energy": float(traj.series[-1]["energy_total"]),
        "species_drift": report.species_drift,
        "max_decay_violation": report.max_violation,
    }
    write_manifest(out / "manifest.json", resolved,
                   {**extra, "status": "completed", "snapshots": snaps.written, "summary": summary})
    np.save(out / "final_phi.npy", traj.final.phi)
    for w, v in traj.final.phi_s.items():
        np.save(out / f"final_phi_s_{w}.npy", v)
    return summary


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    out = Path(args.out or cfg["output"]["dir"])
    summary = execute(cfg, out)
    log.info("run complete: %s", json.dumps(summary))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = parse_config(args.config)
    results = checks.run_suite(cfg)
    table = checks.format_table(results)
    if not args.quiet:
        print(table)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "check.txt").write_text(table + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _parse_vary(items: list[str]) -> list[tuple[str, list]]:
    out = []
    errors = []
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not values:
            errors.append(f"--vary {item!r}: expected key=v1,v2,...")
            continue
        parsed = []
        for v in values.split(","):
            try:
                parsed.append(json.loads(v))
            except json.JSONDecodeError:
                parsed.append(v)
        out.append((SWEEP_ALIASES.get(key, key), parsed))
    if errors:
        raise ConfigError(errors)
    return out


def _reference(cfg: RunConfig, varied: list[str]) -> RunConfig:
    """Dirichlet counterpart: Robin conditions whose coefficient is swept become
    Dirichlet; with no coefficient swept, both conditions do."""
    kinds = [k for k, key in (("mu", "params.L_mu"), ("phi", "params.L_phi")) if key in varied]
    ref = cfg
    for kind in kinds or ["phi", "mu"]:
        ref = ref.with_override(f"bc.{kind}", "dirichlet")
        for wall in ("low", "high"):
            if kind in ref["bc"].get(wall, {}):
                ref = ref.with_override(f"bc.{wall}.{kind}", "dirichlet")
    return ref


def _sweep_job(job):
    cfg, out = job
    try:
        summary = execute(cfg, out)
    except SolverError as exc:
        return {"status": "failed", "error": str(exc)}
    return {"status": "ok", **summary}


def cmd_sweep(args) -> int:
    base = parse_config(args.config)
    vary = _parse_vary(args.vary or [])
    if not vary:
        raise ConfigError(["sweep needs at least one --vary key=v1,v2,..."])
    out = Path(args.out or base["output"]["dir"])
    keys = [k for k, _ in vary]
    combos = list(itertools.product(*(v for _, v in vary)))
    cfgs, errors = [], []
    for combo in combos:
        cfg = base
        try:
            for key, value in zip(keys, combo):
                cfg = cfg.with_override(key, value)
        except ConfigError as exc:
            errors.extend(f"{dict(zip(keys, combo))}: {e}" for e in exc.errors)
            continue
        cfgs.append(cfg)
    if errors:
        raise ConfigError(errors)
    jobs = [(cfg, out / f"run_{i:03d}") for i, cfg in enumerate(cfgs)]
    jobs.append((_reference(base, keys), out / "reference"))
    threads = _thread_count()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    ref_ok = results[-1]["status"] == "ok"
    ref_phi = np.load(out / "reference" / "final_phi.npy") if ref_ok else None
    rows = []
    for i, (combo, res) in enumerate(zip(combos, results[:-1])):
        row = {"run": f"run_{i:03d}", **{k: json.dumps(v) for k, v in zip(keys, combo)}}
        row["status"] = res["status"]
        for col in ("final_energy", "species_drift", "max_decay_violation"):
            row[col] = float(res.get(col, float("nan")))
        if ref_ok and res["status"] == "ok":
            phi = np.load(out / row["run"] / "final_phi.npy")
            row["distance_to_reference"] = float(np.abs(phi - ref_phi).max())
        else:
            row["distance_to_reference"] = float("nan")
        rows.append(row)
    cols = ["run", *keys, "status", "final_energy", "species_drift",
            "max_decay_violation", "distance_to_reference"]
    write_rows(out / "summary.csv", rows, cols)
    if not args.quiet:
        print((out / "summary.csv").read_text(), end="")
    failed = any(r["status"] != "ok" for r in results)
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"chdyn {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--quiet", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run one simulation")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("check", parents=[common], help="run the invariant suite")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("sweep", parents=[common], help="run a parameter cross-product")
    p.add_argument("config")
    p.add_argument("--vary", action="append", metavar="KEY=V1,V2,...",
                   help="dotted config key or one of: " + ", ".join(SWEEP_ALIASES))
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
