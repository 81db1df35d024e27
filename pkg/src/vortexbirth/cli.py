"""Command line front end.

Exit codes: 0 success (certified or inconclusive prediction, concordant
verification), 1 configuration error, 2 scientific rejection or discordance,
3 numerical failure in the solver.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .model import ConfigError, Scenario, load_scenario, nondimensionalize
from .predictor import CERTIFIED, REJECTED, build_report, locate_separation, zero_count_sweep
from .solver import BlowUpError, Grid2, SolverConfig, first_transition_time, run, write_snapshots

log = logging.getLogger("vortexbirth")

EXIT_OK, EXIT_CONFIG, EXIT_REJECTED, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_TMAX = 0.5
DEFAULT_END_TIME = 0.1
GAP_TOL = 0.25
SUBWINDOW_SHRINK = 0.05


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _run_dir(out: Path, scenario: Scenario, command: str) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    d = Path(out) / f"{stamp}_{command}_{scenario.hash()}"
    d.mkdir(parents=True, exist_ok=False)
    return d


def _write_manifest(run_dir: Path, args, command: str, params: dict, files: list[str], started: float) -> None:
    from . import kernels

    manifest = {
        "command": command,
        "config": str(args.config),
        "parameters": params,
        "output_dir": str(run_dir),
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "files": sorted(files),
        "wall_clock_seconds": round(time.time() - started, 3),
        "finished_utc": datetime.now(timezone.utc).isoformat(),
    }
    (run_dir / "manifest.json").write_text(_dump(manifest))


def _predict(scenario: Scenario, tmax: float):
    ds = nondimensionalize(scenario)
    ev = locate_separation(ds, tmax)
    return ds, ev, build_report(ev, ds, scenario)


def _write_sweep(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "zero_count"])
        for t, c in rows:
            w.writerow([repr(float(t)), c])


def cmd_predict(args) -> int:
    started = time.time()
    scenario = load_scenario(args.config)
    ds, ev, report = _predict(scenario, args.tmax)
    run_dir = _run_dir(args.out, scenario, "predict")
    files = ["report.json"]
    (run_dir / "report.json").write_text(_dump(report))
    if not args.json_only:
        _write_sweep(run_dir / "zero_count.csv", zero_count_sweep(ds, args.tmax))
        files.append("zero_count.csv")
    _write_manifest(run_dir, args, "predict", {"tmax": args.tmax}, files, started)
    print(f"{ev.verdict}: t0={report['t0']} x_bar={report['x_bar']} -> {run_dir}")
    return EXIT_REJECTED if ev.verdict == REJECTED else EXIT_OK


def _simulate(ds, args, end_time: float, run_dir: Path, files: list[str]):
    grid = Grid2.square(args.grid, ds.window)
    cfg = SolverConfig.default(grid, end_time, mode=args.mode)
    stride = max(1, cfg.n_steps // args.snapshots)
    cfg = SolverConfig(grid, cfg.dt, end_time, args.mode, snapshot_stride=stride)
    blown = None
    try:
        snaps = run(ds, cfg)
    except BlowUpError as exc:
        blown, snaps = exc, exc.snapshots
    # keep at least two cells between the search window and the Dirichlet rows
    margin = max(SUBWINDOW_SHRINK, 2 * max(grid.hx / ds.window.width, grid.hy / ds.window.height))
    sub = ds.window.shrink(margin)
    first, timeline = first_transition_time(snaps, sub)
    sim_dir = run_dir / "snapshots"
    if args.json_only:
        sim_dir.mkdir()
        index = {"snapshots": [{"t": s.t, "max_div": s.max_div} for s in snaps], "mode": cfg.mode}
        (sim_dir / "index.json").write_text(_dump(index))
        files.append("snapshots/index.json")
    else:
        index = write_snapshots(snaps, sim_dir, cfg)
        files.append("snapshots/index.json")
        files.extend(f"snapshots/{e['file']}" for e in index["snapshots"])
    with open(run_dir / "stagnation_timeline.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "stagnation_count"])
        for t, c in timeline:
            w.writerow([repr(float(t)), c])
    files.append("stagnation_timeline.csv")
    params = {"mode": cfg.mode, "grid": args.grid, "dt": cfg.dt, "end_time": end_time, "snapshot_stride": stride}
    return first, timeline, blown, params


def _check_grid(args):
    if args.grid < 16:
        raise ConfigError(f"--grid must be at least 16, got {args.grid}")


def cmd_simulate(args) -> int:
    started = time.time()
    _check_grid(args)
    scenario = load_scenario(args.config)
    ds = nondimensionalize(scenario)
    end_time = args.end_time if args.end_time is not None else DEFAULT_END_TIME
    run_dir = _run_dir(args.out, scenario, "simulate")
    files: list[str] = []
    first, timeline, blown, params = _simulate(ds, args, end_time, run_dir, files)
    _write_manifest(run_dir, args, "simulate", params, files, started)
    if blown is not None:
        print(f"solver blow-up: {blown}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"first stagnation-pair snapshot: {first} -> {run_dir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.time()
    _check_grid(args)
    scenario = load_scenario(args.config)
    ds, ev, report = _predict(scenario, args.tmax)
    run_dir = _run_dir(args.out, scenario, "verify")
    files = ["report.json", "verify.json"]
    (run_dir / "report.json").write_text(_dump(report))
    t0 = ev.t0 if ev.verdict == CERTIFIED else None
    if args.end_time is not None:
        end_time = args.end_time
    else:
        end_time = 2 * t0 if t0 is not None else DEFAULT_END_TIME
    first, timeline, blown, params = _simulate(ds, args, end_time, run_dir, files)
    if blown is not None:
        gap, concordant = None, False
        status = "solver_blow_up"
    elif t0 is None and first is None:
        gap, concordant, status = None, True, "no event on either side"
    elif t0 is None or first is None:
        gap, concordant, status = None, False, "event on one side only"
    else:
        gap = abs(first - t0) / t0
        concordant = gap <= GAP_TOL
        status = "concordant" if concordant else "discordant"
    verify = {
        "t0_predicted": t0,
        "verdict": ev.verdict,
        "t_transition_simulated": first,
        "relative_gap": gap,
        "gap_tolerance": GAP_TOL,
        "concordant": concordant,
        "status": status,
        "solver": {k: v for k, v in params.items()},
        "boundary_note": "boundary values follow the first-order expansion; valid only for small t",
    }
    (run_dir / "verify.json").write_text(_dump(verify))
    _write_manifest(run_dir, args, "verify", {"tmax": args.tmax, **params}, files, started)
    print(f"{status}: predicted t0={t0} simulated={first} gap={gap} -> {run_dir}")
    if blown is not None:
        return EXIT_NUMERIC
    return EXIT_OK if concordant else EXIT_REJECTED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortexbirth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, type=Path, help="scenario config file")
        sp.add_argument("--out", default=Path("runs"), type=Path, help="parent directory for run output")
        sp.add_argument("--json-only", action="store_true", help="skip CSV field output")
        sp.add_argument("-v", "--verbose", action="store_true")

    def solver_flags(sp):
        sp.add_argument("--mode", choices=("literal", "projected"), default="literal")
        sp.add_argument("--grid", type=int, default=128, help="nodes per side")
        sp.add_argument("--end-time", type=float, default=None)
        sp.add_argument("--snapshots", type=int, default=100, help="approximate number of stored snapshots")

    sp = sub.add_parser("predict", help="locate the separation time and point")
    common(sp)
    sp.add_argument("--tmax", type=float, default=DEFAULT_TMAX)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", help="integrate the scaled model on a grid")
    common(sp)
    solver_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="predict, simulate and compare transition times")
    common(sp)
    solver_flags(sp)
    sp.add_argument("--tmax", type=float, default=DEFAULT_TMAX)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
