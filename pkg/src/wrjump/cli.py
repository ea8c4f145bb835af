"""Command-line entry point: ``wrjump <command> --config run.json [--out DIR]``.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, RunConfig, initial_density, load
from .guarantees import BanachScaleParams, bounds_report
from .kernels import GridSpec
from .kinetic import KineticRunConfig, solve
from .mesoscale import DEFAULT_EPSILONS, meso_experiment
from .particles import init_poisson, simulate_ensemble, snapshots_to_csv
from .stationary import (classify_stability, constant_solutions, critical_wavenumber,
                         dispersion_table)

log = logging.getLogger("wrjump")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _versions() -> dict:
    import numba
    import scipy
    return {"wrjump": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def run_kinetic(cfg: RunConfig, args) -> dict:
    blk = cfg.raw["kinetic"]
    rc = KineticRunConfig(
        t_end=blk["t_end"], dt=blk["dt"], method=blk.get("method", "rk4"),
        picard_tol=blk.get("picard_tol", 1e-10), picard_max_iter=blk.get("picard_max_iter", 200),
        snapshot_every=blk.get("snapshot_every"),
    )
    rho0 = initial_density(blk["initial"], cfg.grid)
    traj, diag = solve(rho0, cfg.model, rc)
    files = {}
    for k in range(len(traj)):
        snap = traj.snapshot(k)
        for i in (0, 1):
            files[f"snapshots/snap_{k:04d}_rho{i}.csv"] = snap.field(i).to_csv()
    files["run.json"] = _dump({
        "model": cfg.model.to_dict(), "grid": cfg.grid.to_dict(), "cfg": rc.to_dict(),
        "times": traj.times.tolist(), "diagnostics": diag.to_dict(),
    })
    return files


def run_simulate(cfg: RunConfig, args) -> dict:
    blk = cfg.raw["simulate"]
    grid: GridSpec = cfg.grid
    if len(set(grid.box_length)) != 1:
        raise ConfigError("$.grid.box_length", "particle boxes must be cubic")
    L, d = grid.box_length[0], grid.dimension
    t_end = blk["t_end"]
    every = blk.get("snapshot_every", t_end if t_end > 0 else 1.0)
    replicas = blk.get("replicas", 1)
    results = simulate_ensemble(
        lambda rng: init_poisson(L, d, blk["intensity0"], blk["intensity1"], rng),
        cfg.model, t_end, every, cfg.seed, replicas, workers=args.workers,
    )
    attempted = sum(r.stats.events_attempted for r in results)
    accepted = sum(r.stats.events_accepted for r in results)
    stats = {
        "seed": cfg.seed, "replicas": replicas,
        "events_attempted": attempted.tolist(), "events_accepted": accepted.tolist(),
        "acceptance_ratios": [float(a / n) if n else 1.0 for a, n in zip(accepted, attempted)],
        "timing": {"wall_time": sum(r.stats.wall_time for r in results)},
    }
    return {"snapshots.csv": snapshots_to_csv(results), "stats.json": _dump(stats)}


def run_stationary(cfg: RunConfig, args) -> dict:
    blk = cfg.raw["stationary"]
    pts = constant_solutions(blk["Ctilde0"], blk["Ctilde1"], cfg.model,
                             scan_points=blk.get("scan_points", 10_000))
    return {"stationary.json": _dump([p.to_dict() for p in pts])}


def run_stability(cfg: RunConfig, args) -> dict:
    blk = cfg.raw["stability"]
    model = cfg.model
    if "C0" in blk:
        states = [(blk["C0"], blk["C1"])]
    else:
        states = [(p.C0, p.C1) for p in constant_solutions(blk["Ctilde0"], blk["Ctilde1"], model)]
    points = blk.get("points", 401)
    files, summary = {}, []
    for s, (C0, C1) in enumerate(states):
        cls, product = classify_stability(C0, C1, model)
        p_star = critical_wavenumber(C0, C1, model)
        p_max = blk.get("p_max", 3.0 * p_star if p_star else 5.0 / min(model.phi0.range, model.phi1.range))
        rows = ["p,product_hat,lambda_max,lambda_min"]
        for dp in dispersion_table(C0, C1, model, p_max, points):
            rows.append(f"{dp.p!r},{dp.product_hat!r},{dp.growth_rates[0]!r},{dp.growth_rates[1]!r}")
        name = "dispersion.csv" if len(states) == 1 else f"dispersion_state{s}.csv"
        files[name] = "\n".join(rows) + "\n"
        summary.append({"C0": C0, "C1": C1, "product": product, "classification": cls,
                        "p_star": p_star, "dispersion": name})
    files["stability.json"] = _dump(summary[0] if len(summary) == 1 else {"states": summary})
    return files


def run_meso(cfg: RunConfig, args) -> dict:
    blk = cfg.raw["meso"]
    rho0 = initial_density(blk["initial"], cfg.grid)
    dp = blk.get("density_points")
    coarse = cfg.grid if dp is None else GridSpec(cfg.grid.dimension, cfg.grid.box_length, dp)
    report = meso_experiment(
        cfg.model, rho0, blk.get("epsilons", list(DEFAULT_EPSILONS)), replicas=blk.get("replicas", 50),
        t_end=blk.get("t_end", 0.5), snapshot_every=blk.get("snapshot_every", 0.1),
        density_grid=coarse, seed=cfg.seed, kinetic_dt=blk.get("kinetic_dt", 1e-3),
        workers=args.workers, budget=blk.get("particle_budget", 1_000_000),
        bootstrap=blk.get("bootstrap", 200),
    )
    return {"scaling.json": _dump(report.to_dict()), "scaling.csv": report.to_csv()}


def run_bounds(cfg: RunConfig, args) -> dict:
    blk = cfg.raw["bounds"]
    alpha = blk.get("alpha", cfg.model.alpha if cfg.model else None)
    c = blk.get("c", cfg.model.c if cfg.model else None)
    params = BanachScaleParams(alpha, c)
    pairs = list(zip(cfg.model.alphas, cfg.model.phi_masses)) if cfg.model and "alpha" not in blk else None
    report = bounds_report(params, blk["theta"], blk.get("theta_prime"), blk.get("theta_dd"), pairs)
    return {"bounds.json": _dump(report)}


RUNNERS = {
    "kinetic": run_kinetic, "simulate": run_simulate, "stationary": run_stationary,
    "stability": run_stability, "meso": run_meso, "bounds": run_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wrjump", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides out_dir in the config)")
    p.add_argument("--seed", type=int, help="64-bit seed (overrides the config)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--quiet", action="store_true")
    return p


def _write(out: Path, files: dict) -> None:
    for name, text in files.items():
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config, args.command)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed", "seed must be a 64-bit unsigned integer")
            cfg.seed = args.seed
    except ConfigError as exc:
        print(f"config error at {exc.path}: {exc.message}", file=sys.stderr)
        return 1
    out_dir = args.out or cfg.out_dir
    start = time.perf_counter()
    try:
        files = RUNNERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error at {exc.path}: {exc.message}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.error("%s failed: %s", args.command, exc)
        return 2
    wall = time.perf_counter() - start
    if args.command == "bounds" and not args.quiet:
        sys.stdout.write(files["bounds.json"])
    if out_dir:
        out = Path(out_dir)
        manifest = {
            "command": args.command, "config": cfg.raw, "seed": cfg.seed,
            "files": sorted(files), "versions": _versions(),
            "timing": {"wall_time": wall, "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()},
        }
        _write(out, {**files, "manifest.json": _dump(manifest)})
        if not args.quiet:
            print(f"wrote {len(files) + 1} files to {out}")
    return 0


def main() -> None:
    sys.exit(run())
