import argparse
import sys
from pathlib import Path
from typing import List, Optional

import rich
from rich.table import Table

from cutspec import argdoc
from cutspec.config import StudyConfig
from cutspec.console import EXIT_GEOMETRY, EXIT_OK, configure_logging, with_exit_codes
from cutspec.geometry import ElementClass, build_mesh, check_interface_assumption, classify_elements


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Check that the interface crosses each cut element boundary exactly twice"
    )
    parser.add_argument("--config", type=Path, required=True, help=argdoc.CONFIG)
    parser.add_argument("--verbose", action="store_true", help=argdoc.VERBOSE)
    return parser


@with_exit_codes
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    config = StudyConfig.from_file(args.config)
    problem = config.make_problem()

    table = Table(title=f"{problem.name} interface assumption")
    for column in ("N", "h", "negative", "positive", "cut", "status"):
        table.add_column(column, justify="right")
    failed = False
    for N in config.N:
        mesh = classify_elements(build_mesh(problem.domain, N), problem.levelset)
        report = check_interface_assumption(mesh, problem.levelset)
        counts = mesh.counts()
        status = "[green]ok[/green]"
        if not report.ok:
            failed = True
            shown = ", ".join(str(index) for index in report.violations[:5])
            status = f"[red]{len(report.violations)} violations[/red] {shown}"
        table.add_row(
            str(N),
            f"{mesh.h:.4g}",
            str(counts[ElementClass.NEG]),
            str(counts[ElementClass.POS]),
            str(counts[ElementClass.CUT]),
            status,
        )
    rich.print(table)
    return EXIT_GEOMETRY if failed else EXIT_OK


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
