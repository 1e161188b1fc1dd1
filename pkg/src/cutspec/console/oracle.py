import argparse
import sys
from pathlib import Path
from typing import List, Optional

import rich

from cutspec import argdoc, problems
from cutspec.console import EXIT_CONFIG, EXIT_OK, configure_logging, with_exit_codes
from cutspec.errors import ConfigError, UnknownProblem
from cutspec.solvers import DEFAULT_SEED
from cutspec.study import ORACLE_DEGREE, ORACLE_N, compute_reference_eigenvalues


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Compute and pin reference eigenvalues")
    parser.add_argument(
        "--problem", default="CircleEigen", type=str, help=f"{argdoc.PROBLEM}. Defaults to CircleEigen"
    )
    parser.add_argument(
        "--N", default=ORACLE_N, type=int, help=f"{argdoc.NUM_ELEMENTS}. Defaults to {ORACLE_N}"
    )
    parser.add_argument(
        "--p", default=ORACLE_DEGREE, type=int, help=f"{argdoc.DEGREE}. Defaults to {ORACLE_DEGREE}"
    )
    parser.add_argument("--k", default=6, type=int, help=f"{argdoc.NUM_EIGENVALUES}. Defaults to 6")
    parser.add_argument(
        "--seed", default=DEFAULT_SEED, type=int, help=f"{argdoc.SEED}. Defaults to {DEFAULT_SEED:#x}"
    )
    parser.add_argument(
        "--output",
        type=Path,
        default=problems.CIRCLE_EIGEN_REFERENCE,
        help=f"{argdoc.OUTPUT}. Defaults to the pinned file shipped with the package",
    )
    parser.add_argument("--verbose", action="store_true", help=argdoc.VERBOSE)
    return parser


@with_exit_codes
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        problem = problems.registry_problem(args.problem)
    except UnknownProblem as error:
        raise ConfigError(str(error)) from error
    if not problem.is_eigen:
        rich.print(f"[red]{args.problem} is not an eigenvalue problem[/red]", file=sys.stderr)
        return EXIT_CONFIG

    gamma_A, gamma_M = problem.defaults.gamma("h")
    eigenvalues = compute_reference_eigenvalues(
        problem, args.k, args.N, args.p, gamma_A, gamma_M, seed=args.seed
    )
    command = f"cutspec.oracle --problem {args.problem} --N {args.N} --p {args.p} --k {args.k}"
    problems.write_reference(args.output, eigenvalues, problem, args.N, args.p, gamma_A, gamma_M, command)
    for i, value in enumerate(eigenvalues, start=1):
        rich.print(f"lambda_{i} = {value:.15g}")
    rich.print(f"Pinned {len(eigenvalues)} eigenvalues to {args.output}")
    return EXIT_OK


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
