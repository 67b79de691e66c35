"""
Command-line front end.

    flow-analysis <command> <problem.json> [flags]

Reports go to stdout as sorted, indented JSON (or the primary table as CSV
with --format csv); logs and diagnostics go to stderr. Flags override the
matching problem-file fields.

Exit codes: 0 success, 2 schema error, 3 truncation insufficient,
4 certification failure, 5 infeasible or depth exceeded.
"""

from typing import List, Optional
import argparse
import json
import logging
import sys

from ..exceptions import FlowAnalysisException
from ..loaders.problem_loader import ProblemLoader
from ..rules import COMMANDS, parse_a_grid
from ..schema import SamplingEngine, get_enum_values, to_jsonable
from .analysis_pipeline import AnalysisPipeline

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='flow-analysis',
        description='Limit sets of algebraic flows in complex semi-tori.',
    )
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('problem', help='JSON problem file')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--precision-bits', type=int, dest='precision_bits')
    parser.add_argument('--samples', type=int)
    parser.add_argument('--a-grid', dest='a_grid', help='comma list or range such as 2^-4..2^-8')
    parser.add_argument('--tolerance', type=float)
    parser.add_argument('--depth', type=int, dest='depth_bound')
    parser.add_argument('--engine', choices=get_enum_values(SamplingEngine))
    parser.add_argument('--workers', type=int)
    parser.add_argument('--format', choices=['json', 'csv'], default='json', dest='output_format')
    parser.add_argument('--output-dir', dest='output_dir', help='also export tables and the report here')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', '-v', action='store_true')
    verbosity.add_argument('--quiet', '-q', action='store_true')
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s', force=True)


def render(report: dict) -> str:
    """Byte-stable JSON text of a report."""
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2)


def report_load(loader: ProblemLoader, verbose: bool):
    """Loader counts, unknown fields and defaults on stderr (verbose runs only)."""
    if verbose:
        print(f"load report: {render(loader.get_load_report())}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return 2 if exit_.code else 0
    configure_logging(args.verbose, args.quiet)

    loader = ProblemLoader()
    try:
        problem = loader.load(args.problem)
        problem = problem.with_overrides(
            seed=args.seed, precision_bits=args.precision_bits, samples=args.samples,
            a_grid=parse_a_grid(args.a_grid), tolerance=args.tolerance,
            depth_bound=args.depth_bound, engine=args.engine, workers=args.workers,
        )
    except FlowAnalysisException as err:
        report_load(loader, args.verbose)
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    report_load(loader, args.verbose)

    pipeline = AnalysisPipeline(problem, args.output_dir)
    report, code = pipeline.run(args.command)
    if code != 0:
        print(f"error: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)

    table = pipeline.primary_table(args.command)
    if args.output_format == 'csv' and table is not None:
        sys.stdout.write(table.to_csv(index=False))
    else:
        if args.output_format == 'csv':
            logger.warning(f"{args.command} has no table; printing JSON")
        print(render(report))

    if args.output_dir:
        pipeline.export_report(args.command)
        for name in pipeline.tables:
            pipeline.export_to_csv(name)
        if 'samples' in pipeline.tables:
            pipeline.export_to_parquet('samples')
    return code


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == '__main__':
    run()
