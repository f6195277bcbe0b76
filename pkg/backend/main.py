"""
Scherk Lab - Command Line Entry Point
scherk-lab admissible|solve|flux|barrier|halfspace --config <path> [--out <dir>] [--dump-config]
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from backend.config import Config, ConfigError, ExperimentConfig, HALFSPACE_MODES
from backend.exceptions import ScherkLabError
from backend.experiments.pipeline import MissingInput, ScherkLab
from backend.flux.flux_validator import FluxAuditFailed
from backend.loaders.mesh_loader import MeshFormatError
from backend.loaders.polygon_loader import PolygonSpecError
from backend.logging_config import setup_logging
from backend.polygons.admissibility import Verdict
from backend.polygons.ideal_polygon import InvalidPolygon
from backend.solvers.barrier import NotHalved, SandwichViolated, TrendViolated
from backend.solvers.dirichlet import NonConvergence
from backend.solvers.scherk import NotAdmissible, NotStabilized

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_ADMISSIBLE = 2
EXIT_INCONCLUSIVE = 3
EXIT_ALARM = 4

COMMANDS = ("admissible", "solve", "flux", "barrier", "halfspace")

VERDICT_EXIT = {
    Verdict.ADMISSIBLE: EXIT_OK,
    Verdict.NOT_ADMISSIBLE: EXIT_NOT_ADMISSIBLE,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def exit_code_for(error: BaseException) -> int:
    """Map a failure to the CLI exit code."""
    if isinstance(error, NotAdmissible):
        return EXIT_NOT_ADMISSIBLE
    if isinstance(error, (
        NonConvergence, NotStabilized, SandwichViolated, TrendViolated, NotHalved, FluxAuditFailed,
    )):
        return EXIT_ALARM
    if isinstance(error, (ConfigError, PolygonSpecError, MeshFormatError, MissingInput, InvalidPolygon)):
        return EXIT_INPUT
    if isinstance(error, ScherkLabError):
        return EXIT_ALARM
    if isinstance(error, (ValueError, OSError)):
        return EXIT_INPUT
    return EXIT_ALARM


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scherk-lab",
        description="Ideal Scherk graphs in the hyperbolic plane: admissibility, solves, flux audits, barriers.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="experiment configuration (JSON)")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the fully resolved configuration and exit")
    parser.add_argument("--field", help="field file for 'flux' (default: deepest solve output)")
    parser.add_argument("--mode", choices=HALFSPACE_MODES, help="half-space mode (overrides halfspace.mode)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", default=None, help="log file name inside LOG_DIR")
    return parser


def run(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.dump_config:
        print(cfg.dumps())
        return EXIT_OK

    lab = ScherkLab(cfg)
    if args.command == "admissible":
        report = lab.cmd_admissible()
        print(f"Verdict: {report.verdict.value} (balance {lab.scale * report.balance:.3e})")
        return VERDICT_EXIT[report.verdict]
    if args.command == "solve":
        fields = lab.cmd_solve()
        print(f"Solved {len(fields)} truncation level(s); outputs in {cfg.output_dir}")
    elif args.command == "flux":
        report = lab.cmd_flux(args.field)
        print(f"Flux audit passed: total {report.total:.6e}, sum |c| {report.sum_c:.6e}")
    elif args.command == "barrier":
        family = lab.cmd_barrier()
        print(f"Barrier family: {len(family.members)} members, halved={family.halved}")
    else:
        result = lab.cmd_halfspace(args.mode)
        print(f"Half-space sweep finished: {type(result).__name__}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(log_level=args.log_level, log_file=args.log_file)

    ok, errors = Config.validate_config()
    if not ok:
        for error in errors:
            print(f"Configuration error: {error}", file=sys.stderr)
        return EXIT_INPUT

    try:
        return run(args)
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_INPUT:
            logger.error(f"Invalid input: {e}")
        elif code == EXIT_NOT_ADMISSIBLE:
            logger.error(f"Not admissible: {e}")
        else:
            logger.error(f"Run failed: {e}", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
