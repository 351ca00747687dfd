"""Command-line entry point: `parafree <command> ...`.

Exit codes: 0 success, 1 configuration or input error, 2 free-boundary
non-convergence, 3 verification failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__
from .api import FreeBoundaryStudy, StatementOutcome, format_summary
from .config import ConfigError, RunConfig
from .core.elliptic_ops import validate
from .core.errors import RegionError, SolverError
from .core.field_io import write_report
from .core.fb_solver import SolveResult
from .verification import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY = 3

# PreconditionError, StencilError and field-file parse errors are ValueErrors
INPUT_ERRORS = (FileNotFoundError, ConfigError, RegionError, ValueError)

EXIT_CODES_HELP = """exit codes:
  0  success (estimator precondition failures are flagged rows)
  1  configuration or input error
  2  free-boundary fixed point did not converge
  3  verification failure (residual check, acceptance criterion or operator hypothesis)"""


def _summary_header(study: FreeBoundaryStudy, command: str, result: SolveResult) -> list[str]:
    theta_u, theta_g = study.params.thresholds(result.grid)
    return [
        f"command: {command}",
        f"operator: {study.operator.describe()}",
        f"grid: {result.grid.header()}",
        f"mode: {result.mode.value}",
        f"K: {study.params.K!r}",
        f"theta_u: {theta_u!r}",
        f"theta_g: {theta_g!r}",
        f"linear_tol: {study.params.linear_tol!r}",
        f"scales: {list(study.analysis.scales)}",
    ]


def _write_summary(study: FreeBoundaryStudy, command: str, result: SolveResult,
                   outcomes: Sequence[StatementOutcome]) -> Path:
    text = format_summary(outcomes, _summary_header(study, command, result), study.analysis.statement_names)
    print(text)
    return write_report(study.output_dir / "summary.txt", text)


def cmd_solve(args: argparse.Namespace) -> int:
    study = FreeBoundaryStudy.from_yaml(args.config)
    try:
        result = study.solve()
    except SolverError as e:
        print(f"⚠️ Solver failed (worst residual {e.worst_residual:.3e}): {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED

    if not result.converged:
        paths = study.save_solution(result, export_csv=args.csv)
        print(f"⚠️ Wrote last iterate and proposed Ω to {paths['mask'].parent}")
        return EXIT_NOT_CONVERGED

    report = study.verify(result)
    paths = study.save_solution(result, report, export_csv=args.csv)
    print(f"✓ Wrote solution to {paths['field'].parent}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _analysis_command(name: str, run: Callable[[FreeBoundaryStudy, SolveResult], list[StatementOutcome]]):
    def command(args: argparse.Namespace) -> int:
        study = FreeBoundaryStudy.from_yaml(args.config)
        result = study.load_result(args.field, args.mask)
        outcomes = run(study, result)
        path = _write_summary(study, name, result, outcomes)
        print(f"✓ Wrote {len(outcomes)} estimator reports and {path}")
        return EXIT_OK
    return command


cmd_analyze = _analysis_command("analyze", FreeBoundaryStudy.analyze)
cmd_ladder = _analysis_command("ladder", FreeBoundaryStudy.run_ladder)
cmd_blowup = _analysis_command("blowup", FreeBoundaryStudy.run_blowup)


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_suite(coarse=args.coarse, only=args.only, echo=print)
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"⚠️ {len(failed)} of {len(results)} criteria failed: "
              + ", ".join(str(r.number) for r in failed))
        return EXIT_VERIFY
    print(f"✓ All {len(results)} criteria passed")
    return EXIT_OK


def cmd_operators_validate(args: argparse.Namespace) -> int:
    config = RunConfig.from_yaml(args.config)
    op = config.build_operator()
    report = validate(op, sample_count=args.samples, seed=args.seed)
    print(f"operator: {op.describe()}")
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parafree",
        description="Free-boundary solver and analysis tools for F(D²u) - ∂ₜu = χ_Ω",
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"parafree {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="Solve the free-boundary problem of a run config")
    solve.add_argument("config", help="Run configuration (YAML)")
    solve.add_argument("--csv", action="store_true", help="Also export u as a flat CSV")
    solve.set_defaults(handler=cmd_solve)

    for name, handler, text in (
        ("analyze", cmd_analyze, "Thickness, non-degeneracy, growth, time decay and monotonicity"),
        ("ladder", cmd_ladder, "Polynomial ladder, BMO, density decay and decomposition"),
        ("blowup", cmd_blowup, "Blow-up fits and free-boundary graph slopes"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="Run configuration (YAML)")
        p.add_argument("--field", help="PARAFREE-FIELD file with u (default: the config's problem data)")
        p.add_argument("--mask", help="PARAFREE-FIELD file with the Ω indicator")
        p.set_defaults(handler=handler)

    verify = sub.add_parser("verify", help="Run the acceptance suite")
    verify.add_argument("--coarse", action="store_true", help="Halve the grid resolution")
    verify.add_argument("--only", type=int, nargs="+", metavar="N", help="Run only these criteria")
    verify.set_defaults(handler=cmd_verify)

    operators = sub.add_parser("operators", help="Operator utilities")
    op_sub = operators.add_subparsers(dest="operators_command", required=True)
    check = op_sub.add_parser("validate", help="Check (H0)-(H2) on random matrix pairs")
    check.add_argument("config", help="Run configuration (YAML) with an operator block")
    check.add_argument("--samples", type=int, default=1000, help="Random pairs to test")
    check.add_argument("--seed", type=int, default=0, help="Random seed")
    check.set_defaults(handler=cmd_operators_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.handler(args)
    except INPUT_ERRORS as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        logger.exception(f"parafree {args.command} failed")
        raise


if __name__ == "__main__":
    sys.exit(main())
