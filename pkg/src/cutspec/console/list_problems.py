import argparse
import sys
from typing import List, Optional

import rich
from rich.table import Table

from cutspec import problems
from cutspec.console import EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argparse.ArgumentParser(description="List the registered problems").parse_args(argv)
    table = Table(title="Problems")
    for column in ("name", "kind", "domain", "alpha+", "alpha-", "description"):
        table.add_column(column)
    for name in problems.list_problems():
        problem = problems.registry_problem(name)
        d = problem.domain
        table.add_row(
            name,
            "eigen" if problem.is_eigen else "source",
            f"[{d.x0:.4g}, {d.x1:.4g}] x [{d.y0:.4g}, {d.y1:.4g}]",
            f"{problem.alpha_plus:g}",
            f"{problem.alpha_minus:g}",
            problem.description,
        )
    rich.print(table)
    return EXIT_OK


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
