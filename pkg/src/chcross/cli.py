"""Command-line entry point: ``chcross <subcommand> [options]``.

Exit codes: 0 success, 1 validation warnings under ``--strict``, 2 runtime
or configuration failure, 64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .convergence import StudyConfig, StudyError, fit_order, spatial_study, temporal_study
from .diagnostics import MonitorReport, accumulate, record
from .errors import ArgumentError, SolverError
from .io import write_energy_csv, write_field_vtk, write_rate_csv
from .mesh import build_rect_mesh, interpolate_nodal
from .stepper import SchemeParams, initial_state, run, step_count, validate_params

log = logging.getLogger("chcross")

EXIT_OK, EXIT_WARN, EXIT_FAIL, EXIT_USAGE = 0, 1, 2, 64

COMMANDS = {
    "run": "single simulation with energy CSV and optional VTK snapshots",
    "temporal-study": "temporal refinement study (defaults: 128x128, tau_ref = 5e-4)",
    "spatial-study": "spatial refinement study (defaults: 256x256 reference, tau = 1e-3)",
    "morphology": "long morphology run with constant mobility g = 0.01",
    "selftest": "quick invariant checks on small meshes",
}

MORPHOLOGY_PRESET = dict(
    eps=0.3, g=0.01, S=1.0, truncation=None, nx=128, ny=128, tau=1e-3, T=1.0,
    initial="random", phi_mean=0.3, c_mean=0.5, noise=0.05, seed=0, snapshot_every=400,
)


def usage() -> str:
    width = max(map(len, COMMANDS))
    lines = ["usage: chcross <command> [--config PATH] [--out DIR] [--snapshot-every K] [--strict]", "", "commands:"]
    lines += [f"  {name.ljust(width)}  {desc}" for name, desc in COMMANDS.items()]
    return "\n".join(lines)


def _thread_cap() -> Optional[int]:
    raw = os.environ.get("CHCROSS_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CHCROSS_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"CHCROSS_THREADS must be a positive integer, got {raw!r}")
    return n


def load_config(args, base: Optional[RunConfig] = None) -> RunConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    cfg = parse_config(text, base)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if args.snapshot_every is not None:
        cfg = replace(cfg, snapshot_every=args.snapshot_every)
    return cfg


def build_problem(cfg: RunConfig):
    mesh = build_rect_mesh(cfg.x0, cfg.x1, cfg.y0, cfg.y1, cfg.nx, cfg.ny)
    params = SchemeParams(
        mesh, cfg.tau, cfg.eps, cfg.S, cfg.potential(), cfg.T, cfg.g, K1=cfg.K1, K2=cfg.K2,
    )
    phi0, c0 = cfg.initial_fields()
    return params, initial_state(interpolate_nodal(mesh, phi0), interpolate_nodal(mesh, c0))


def _report_warnings(params: SchemeParams, strict: bool) -> bool:
    """Log parameter warnings; return True when ``--strict`` should abort."""
    escalate = False
    for w in validate_params(params):
        if w.is_info:
            log.info("%s", w)
        else:
            log.warning("%s", w)
            escalate = True
    return escalate and strict


def simulate_to_disk(cfg: RunConfig, strict: bool) -> int:
    params, state = build_problem(cfg)
    n_steps = step_count(params.T, params.tau)
    if _report_warnings(params, strict):
        return EXIT_WARN
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    every = cfg.snapshot_every
    if every > 0:
        write_field_vtk(state, out / f"snapshot_{0:06d}.vtk")

    records = []
    report = MonitorReport()

    def observer(prev, new):
        rec = record(prev, new, params)
        records.append(rec)
        accumulate(report, rec, prev, new, params)
        if every > 0 and (new.step_index % every == 0 or new.step_index == n_steps):
            write_field_vtk(new, out / f"snapshot_{new.step_index:06d}.vtk")

    t0 = time.perf_counter()
    final = run(state, params, observer, n_steps)
    log.info("%d steps in %.1f s, final t = %g", n_steps, time.perf_counter() - t0, final.t)
    if records:
        write_energy_csv(records, out / "energy.csv")
    (out / "monitor.txt").write_text("".join(f"{k} = {v!r}\n" for k, v in report.as_dict().items()))
    return EXIT_OK


def _study_config(cfg: RunConfig, mode: str) -> StudyConfig:
    common = dict(
        domain=(cfg.x0, cfg.x1, cfg.y0, cfg.y1), eps=cfg.eps, S=cfg.S, g=cfg.g,
        potential=cfg.potential(), T=cfg.T,
    )
    common["phi0"], common["c0"] = cfg.initial_fields()
    if mode == "temporal":
        study = StudyConfig.temporal(
            tau_ref=cfg.tau_ref if cfg.tau_ref is not None else 5e-4,
            n_ref=cfg.n_ref if cfg.n_ref is not None else cfg.nx,
            **common,
        )
    else:
        study = StudyConfig.spatial(
            tau_ref=cfg.tau_ref if cfg.tau_ref is not None else cfg.tau,
            **({"n_ref": cfg.n_ref} if cfg.n_ref is not None else {}),
            **common,
        )
    if cfg.sweep is not None:
        sweep = cfg.sweep if mode == "temporal" else tuple(int(v) for v in cfg.sweep)
        study = replace(study, sweep=sweep)
    study.validate()
    return study


def run_study(cfg: RunConfig, mode: str, strict: bool) -> int:
    study = _study_config(cfg, mode)
    params = study.params(study.mesh(study.n_ref), study.tau_ref)
    if _report_warnings(params, strict):
        return EXIT_WARN
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = temporal_study(study) if mode == "temporal" else spatial_study(study)
    path = out / f"rates_{mode}.csv"
    write_rate_csv(rows, path)
    for r in rows:
        rate = "" if r.rate_phi is None else f"{r.rate_phi:5.2f}"
        log.info("res %-10.4g  err_phi %.4e %s  err_c %.4e  err_mu %.4e", r.resolution, r.err_phi_H1, rate, r.err_c, r.err_mu_H1)
    if len(rows) >= 3:
        log.info("fitted phi order: %.3f", fit_order(rows, "err_phi_H1"))
    log.info("wrote %s", path)
    return EXIT_OK


def _dispatch(command: str, args) -> int:
    _thread_cap()
    if command == "selftest":
        from .selftest import run_selftest

        return EXIT_OK if run_selftest(print) else EXIT_FAIL
    if command == "morphology":
        cfg = load_config(args, RunConfig(**{**RunConfig().__dict__, **MORPHOLOGY_PRESET}))
        return simulate_to_disk(cfg, args.strict)
    cfg = load_config(args)
    if command == "run":
        return simulate_to_disk(cfg, args.strict)
    return run_study(cfg, command.split("-")[0], args.strict)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("-V", "--version"):
        print(__version__)
        return EXIT_OK
    if not argv or argv[0] not in COMMANDS:
        print(usage(), file=sys.stderr)
        return EXIT_USAGE

    parser = argparse.ArgumentParser(prog=f"chcross {argv[0]}", description=COMMANDS[argv[0]])
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    parser.add_argument("--snapshot-every", type=int, metavar="K", help="write VTK every K steps (0 = never)")
    parser.add_argument("--strict", action="store_true", help="exit 1 on parameter warnings")
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_args(argv[1:])
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return _dispatch(argv[0], args)
    except (ArgumentError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    except (SolverError, StudyError) as exc:
        log.error("run failed: %s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
