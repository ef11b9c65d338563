"""Command line: scenario dispatch and deterministic artifact emission.

Exit codes are part of the contract: 0 success, 1 config problem,
2 numerical failure (trace drift, lost unitarity), 3 output I/O. All
numerics run before the first byte is written, so a failed run never
leaves a partial output directory behind, and the manifest is written
last once every listed file is in place.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .berry import adiabatic_run, standard_loop
from .config import (
    DEFAULT_FOCK_CUTOFF,
    TASKS,
    ConfigError,
    ScenarioConfig,
    config_reference,
    config_sha256,
    parse_config,
)
from .dynamics import (
    IntegrationError,
    StepControl,
    evolve_master,
    evolve_schrodinger,
)
from .gates import extract_gate, regime_scan
from .hilbert import basis_state
from .models import (
    collect_jump_operators,
    dispersive_hamiltonian,
    eliminated_generator,
    full_hamiltonian,
    reduced_hamiltonian,
)
from .output import (
    atomic_write,
    canonical_json,
    fmt_float,
    matrix_csv,
    scan_csv,
    trajectory_csv,
    write_manifest,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _require_coherent(cfg: ScenarioConfig):
    for key in ("kappa", "tau"):
        if getattr(cfg.params, key) > 0:
            raise ConfigError(
                f"params.{key}",
                f"model {cfg.model} is coherent only; use model eliminated",
            )


def _generator(cfg: ScenarioConfig):
    """(H, jumps-or-None, spec) for the configured model."""
    spec = cfg.hilbert_spec()
    if cfg.model == "full":
        return (
            full_hamiltonian(cfg.params, spec),
            collect_jump_operators(cfg.params, spec),
            spec,
        )
    if cfg.model == "eliminated":
        H, jumps = eliminated_generator(cfg.params, spec)
        return H, jumps, spec
    _require_coherent(cfg)
    if cfg.model == "dispersive":
        return dispersive_hamiltonian(cfg.params, spec), None, spec
    return reduced_hamiltonian(cfg.params, spec), None, spec


def _ctrl(cfg: ScenarioConfig) -> StepControl:
    return StepControl(
        dt=cfg.dt,
        record_every=cfg.record_every,
        trace_tolerance=cfg.trace_tolerance,
    )


def _basis_labels(spec) -> list[str]:
    ordered = []
    for l1 in spec.ion_levels:
        for l2 in spec.ion_levels:
            if spec.has_cavity:
                for n in range(spec.cavity_dim):
                    ordered.append((spec.index(l1, l2, n), f"pop_{l1}{l2}_{n}"))
            else:
                ordered.append((spec.index(l1, l2), f"pop_{l1}{l2}"))
    ordered.sort()
    return [label for _, label in ordered]


def _run_dump(cfg: ScenarioConfig):
    H, jumps, _ = _generator(cfg)
    files = {"hamiltonian.csv": matrix_csv(H.mat)}
    if jumps is not None:
        for op in jumps:
            files[f"{op.label}.csv"] = matrix_csv(op.mat)
    return files, f"dim {H.dim}, {0 if jumps is None else len(jumps)} jump operators"


def _run_simulate(cfg: ScenarioConfig):
    H, jumps, spec = _generator(cfg)
    l1, l2 = cfg.initial_ions
    photons = cfg.initial_photons if spec.has_cavity else None
    psi0 = basis_state(spec, l1, l2, photons)
    ctrl = _ctrl(cfg)
    if jumps is None or jumps.is_empty:
        traj = evolve_schrodinger(psi0, H, cfg.t_final, ctrl)
        pops = [np.abs(np.asarray(s.amp)) ** 2 for s in traj.states]
    else:
        rho0 = np.outer(psi0.amp, psi0.amp.conj())
        traj = evolve_master(rho0, (H, jumps), cfg.t_final, ctrl)
        pops = [np.real(np.diagonal(np.asarray(s.mat))) for s in traj.states]
    text = trajectory_csv(traj.times, pops, _basis_labels(spec))
    return {"trajectory.csv": text}, f"{len(traj.times)} frames to t = {cfg.t_final:g}"


def _run_gate(cfg: ScenarioConfig):
    report = extract_gate(
        cfg.model,
        cfg.params,
        t_gate=cfg.t_gate,
        ctrl=_ctrl(cfg),
        fock_cutoff=cfg.fock_cutoff or DEFAULT_FOCK_CUTOFF,
    )
    files = {"gate_report.json": canonical_json(report.to_json_dict())}
    return files, f"fidelity = {fmt_float(report.fidelity)}"


def _run_scan(cfg: ScenarioConfig, workers: int):
    rows = regime_scan(
        cfg.scan_axis,
        list(cfg.scan_values),
        cfg.params,
        cfg.model,
        omega_ratio=cfg.omega_ratio,
        ctrl=_ctrl(cfg),
        fock_cutoff=cfg.fock_cutoff or DEFAULT_FOCK_CUTOFF,
        workers=workers,
    )
    failed = sum(1 for r in rows if r.status != "ok")
    note = f"{len(rows)} rows" + (f", {failed} failed" if failed else "")
    return {"scan.csv": scan_csv(rows)}, note


def _run_berry(cfg: ScenarioConfig):
    loop = standard_loop(
        cfg.loop.theta0,
        cfg.loop.T,
        ramp_fraction=cfg.loop.ramp_fraction,
        windings=cfg.loop.windings,
    )
    report = adiabatic_run(loop, cfg.loop.Omega_bar, _ctrl(cfg))
    files = {"berry_report.json": canonical_json(report.to_json_dict())}
    return files, f"numeric phase = {fmt_float(report.numeric_phase)}"


def run(config: ScenarioConfig, *, workers: int = 1, quiet: bool = False) -> int:
    """Executes one parsed scenario and writes its artifacts."""
    try:
        if config.task == "dump":
            files, note = _run_dump(config)
        elif config.task == "simulate":
            files, note = _run_simulate(config)
        elif config.task == "gate":
            files, note = _run_gate(config)
        elif config.task == "scan":
            files, note = _run_scan(config, workers)
        else:
            files, note = _run_berry(config)
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ArithmeticError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL

    try:
        for name in sorted(files):
            atomic_write(os.path.join(config.output, name), files[name])
        write_manifest(
            config.output, config_sha256(config), __version__, files
        )
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_IO

    if not quiet:
        print(f"{config.task}: {note}")
        for name in sorted(files) + ["manifest.json"]:
            print(f"  wrote {os.path.join(config.output, name)}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcavity",
        description="Cavity-mediated two-qubit phase gate simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for task in TASKS:
        sp = sub.add_parser(task, help=f"run a {task} scenario")
        sp.add_argument("--config", required=True, help="scenario JSON path")
        sp.add_argument("--out", default=None, help="override the output directory")
        sp.add_argument(
            "--workers", type=int, default=1,
            help="parallel scan points (outputs do not depend on this)",
        )
        sp.add_argument(
            "--dt", type=float, default=None, help="override the integrator step"
        )
        sp.add_argument("--quiet", action="store_true", help="suppress the summary")
    sub.add_parser("config-reference", help="print the config schema")
    args = parser.parse_args(argv)

    if args.command == "config-reference":
        print(config_reference())
        return EXIT_OK

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"config error: cannot read {args.config}: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = parse_config(text)
        if cfg.task != args.command:
            raise ConfigError(
                "task", f"config says {cfg.task} but the command is {args.command}"
            )
        cfg = cfg.with_overrides(out=args.out, dt=args.dt)
        if args.workers < 1:
            raise ConfigError("workers", "must be >= 1")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    return run(cfg, workers=args.workers, quiet=args.quiet)
