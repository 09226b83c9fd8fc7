import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from cli.commands import COMMANDS, HANDLERS, RunConfig, SWEEP_CONSTANTS, provenance
from utils.config import config
from utils.errors import BracketError, CdModelsError, DensityFormatError, DomainError, PreconditionError
from utils.io import write_json, write_report, write_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_BRACKET = 3

# accept `start:stop:count` ranges in sweeps
RANGE_FLAGS = ('p', 'K', 'N', 'D')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cdmodels', description="Sharp constants of the CD(K,N) model spaces.")
    parser.add_argument('command', choices=COMMANDS)
    for name in RANGE_FLAGS:
        parser.add_argument(f'--{name}', type=str, help=f"{name} (a start:stop:count range for sweep)")
    parser.add_argument('--tol', type=float, default=config.TOL, help=f"Tolerance (default: {config.TOL:g}).")
    parser.add_argument('--grid', type=int, default=config.GRID_NODES, help="Grid nodes per density.")
    parser.add_argument('--density', type=str, help="Density CSV with header t,h.")
    parser.add_argument('--model', type=str, help="Model profile kind used instead of --density.")
    parser.add_argument('--shift', type=float, default=0.0, help="Left end of the model profile.")
    parser.add_argument('--A0', type=str, help="Intervals a:b,c:d")
    parser.add_argument('--A1', type=str, help="Intervals a:b,c:d")
    parser.add_argument('--t', type=float)
    parser.add_argument('--alpha', type=float)
    parser.add_argument('--q', type=float)
    parser.add_argument('--seed', type=int, default=config.SEED)
    parser.add_argument('--trials', type=int, default=config.TRIALS)
    parser.add_argument('--format', choices=('json', 'csv'), default=config.OUTPUT_FORMAT)
    parser.add_argument('--out', type=str, help="Output path (default: stdout).")
    parser.add_argument('--workers', type=int, default=config.WORKERS, help="Processes for sweep.")
    parser.add_argument('--constants', type=str, default='lambda',
                        help=f"Comma-separated sweep columns from {', '.join(SWEEP_CONSTANTS)}.")
    parser.add_argument('--disintegration', type=str, help="Disintegration JSON file.")
    parser.add_argument('--check', choices=('spectral', 'logsob', 'sobolev'), default='spectral',
                        help="Inequality replayed by localize.")
    return parser


def _number(name: str, value: Optional[str]) -> Optional[float]:
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        raise DomainError(f"--{name} must be a number, got {value!r}")


def build_config(args: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(args).items()
              if k not in ('command', 'tol', 'grid', 'format', 'out')}
    if args.command != 'sweep':
        for name in RANGE_FLAGS:
            params[name] = _number(name, params[name])
    params['constants'] = [c.strip() for c in args.constants.split(',') if c.strip()]
    return RunConfig(command=args.command, params=params, grid_nodes=args.grid, tol=args.tol,
                     output=args.out, format=args.format)


def run(cfg: RunConfig) -> int:
    """Dispatch one command and emit its report; returns the exit status"""
    try:
        report, holds = HANDLERS[cfg.command](cfg)
    except (DomainError, DensityFormatError, PreconditionError) as e:
        logger.error(f"Error in {cfg.command}: {e}")
        return EXIT_USAGE
    except BracketError as e:
        logger.error(f"Error in {cfg.command}: {e} (bracket {e.bracket}, residuals {e.residuals})")
        return EXIT_BRACKET
    except CdModelsError as e:
        logger.error(f"Error in {cfg.command}: {e}")
        return EXIT_VIOLATION

    if cfg.command == 'sweep':
        if cfg.format == 'csv':
            write_table(report, cfg.output)
        else:
            write_json({'rows': report, 'provenance': provenance(cfg, 'sweep')}, cfg.output)
    else:
        write_report(report, cfg.format, cfg.output)
    return EXIT_OK if holds else EXIT_VIOLATION


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=config.LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = build_config(args)
    except (ValidationError, DomainError) as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE
    logger.info(f"Running {cfg.command} (grid={cfg.grid_nodes}, tol={cfg.tol:g})")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
