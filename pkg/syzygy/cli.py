"""Command-line entry point.

Subcommands map onto the pipelines in ``syzygy.runs``:

    simulate            trajectory.csv, events.csv, summary.json
    eclipses            events.csv, eclipses.json
    verify-theorem2     verification.json (alias: verify)
    scan-inequalities   scan.csv, scan_summary.json
    find-eight          loop.json, find_eight.json
    conformal-check     conformal.csv, conformal_summary.json
    cone-check          cone_summary.json

Exit codes: 0 clean, 1 failed check or invariant, 2 configuration error,
3 collision or triple-collision termination (outputs still written).
"""

import argparse
import json
import sys
import uuid
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, Optional

from syzygy import __version__, runs
from syzygy.errors import ConfigError, SyzygyError
from syzygy.outputs import DirectorySink, OutputSink, render_json
from syzygy.run_log import get_run_logger
from syzygy.schemas import SOURCES, RunConfig
from syzygy.triangle_core import MassTriple

Handler = Callable[[RunConfig, OutputSink], tuple[dict[str, Any], int]]

HANDLERS: dict[str, Handler] = {
    "simulate": runs.simulate,
    "eclipses": runs.eclipses,
    "verify-theorem2": runs.verify,
    "scan-inequalities": runs.scan,
    "conformal-check": runs.conformal_check,
    "cone-check": runs.cone_check,
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration JSON file")
    common.add_argument("--masses", help="Comma-separated masses, e.g. 1,2,3")
    common.add_argument("--tmax", type=float, help="Integration end time")
    common.add_argument("--rtol", type=float, help="Integrator relative tolerance")
    common.add_argument("--atol", type=float, help="Integrator absolute tolerance")
    common.add_argument("--seed", type=int, help="Seed for random initial conditions and samples")
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--grid", type=int, help="Shape-sphere grid nodes per axis")
    common.add_argument("--refine-tol", type=float, help="Eclipse root tolerance on |z|")
    common.add_argument("--harmonics", type=int, help="Fourier harmonics for loop searches")
    common.add_argument("--samples", type=int, help="Random samples for conformal/cone checks")
    common.add_argument("--source", choices=SOURCES, help="Initial condition source")
    common.add_argument("--loop", type=Path, help="Loop JSON file; implies --source loop")
    common.add_argument("--periods", type=float, help="Loop periods to integrate")
    common.add_argument(
        "--kinetic-fraction", type=float, help="K/2 as a fraction of U (random-zero-j)"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syzygy",
        description="Planar three-body eclipses on the shape sphere",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common_flags()]
    sub.add_parser("simulate", parents=common, help="Integrate one run and write CSV/JSON")
    sub.add_parser("eclipses", parents=common, help="Eclipse sequence of one run")
    sub.add_parser(
        "verify-theorem2",
        aliases=["verify"],
        parents=common,
        help="Run the acceptance criteria",
    )
    sub.add_parser("scan-inequalities", parents=common, help="INEQ1/INEQ2 grid scan")
    sub.add_parser(
        "find-eight",
        parents=common,
        help="Minimize the action from the eight seed (--out DIR or FILE.json)",
    )
    sub.add_parser("conformal-check", parents=common, help="Conformal ratio check")
    sub.add_parser("cone-check", parents=common, help="Hopf cone and Heron residuals")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from ``--config`` (or defaults) with flag overrides applied.

    Raises:
        ConfigError: On unreadable files, bad masses or failed validation
    """
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    masses = None
    if args.masses is not None:
        try:
            masses = MassTriple.parse(args.masses).as_list()
        except ValueError as exc:
            raise ConfigError(str(exc), {"masses": args.masses}) from exc
    out = args.out
    if out is not None and out.suffix == ".json":
        out = out.parent
    cfg = cfg.with_overrides(
        masses=masses,
        tmax=args.tmax,
        rtol=args.rtol,
        atol=args.atol,
        seed=args.seed,
        out=out,
        grid=args.grid,
        refine_tol=args.refine_tol,
        harmonics=args.harmonics,
        source=args.source or ("loop" if args.loop is not None else None),
        loop_path=args.loop,
        periods=args.periods,
        kinetic_fraction=args.kinetic_fraction,
    )
    if args.samples is not None:
        data = cfg.model_dump(mode="json")
        data["verify"]["samples"] = args.samples
        data["verify"]["triangles"] = args.samples
        cfg = RunConfig.parse(data)
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    command = "verify-theorem2" if args.command == "verify" else args.command
    log = get_run_logger("cli").bind(f"run_{uuid.uuid4().hex[:12]}")

    try:
        cfg = load_config(args)
        sink = DirectorySink(cfg.output_dir)
        log.log_run_started(command, masses=cfg.masses, source=cfg.initial.source)
        if command == "find-eight":
            name = args.out.name if args.out is not None and args.out.suffix == ".json" else None
            summary, code = runs.eight(cfg, sink, name or "loop.json")
        else:
            summary, code = HANDLERS[command](cfg, sink)
    except SyzygyError as exc:
        if isinstance(exc, ConfigError):
            log.log_config_rejected(exc.message)
        log.log_run_failed(command, exc.code, exc.message)
        print(json.dumps(exc.to_response(), default=str), file=sys.stderr)
        return exc.exit_code

    sys.stdout.write(render_json(summary))
    log.log_run_completed(command, exit_code=code)
    return code


if __name__ == "__main__":
    sys.exit(main())
