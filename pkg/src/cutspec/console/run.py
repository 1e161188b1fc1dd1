import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import rich
from rich.table import Table

from cutspec import argdoc
from cutspec.config import StudyConfig
from cutspec.console import EXIT_OK, configure_logging, with_exit_codes
from cutspec.study import COLUMNS, StudyResult, emit_csv, run_h_sweep, run_p_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Run an h- or p-convergence study")
    parser.add_argument("--config", type=Path, required=True, help=argdoc.CONFIG)
    parser.add_argument(
        "--override-assumption",
        dest="override_assumption",
        action="store_true",
        help=argdoc.OVERRIDE_ASSUMPTION,
    )
    parser.add_argument(
        "--num-workers",
        type=int,
        help=f"{argdoc.NUM_WORKERS}. Defaults to CUTSPEC_THREADS",
    )
    parser.add_argument(
        "--output", type=Path, help=f"{argdoc.OUTPUT}. Defaults to the config's output key"
    )
    parser.add_argument(
        "--no-progress", dest="no_progress", action="store_true", help=argdoc.NO_PROGRESS
    )
    parser.add_argument("--verbose", action="store_true", help=argdoc.VERBOSE)
    return parser


def _format(value) -> str:
    if isinstance(value, float):
        return "-" if np.isnan(value) else f"{value:.4e}"
    return str(value)


def print_records(result: StudyResult):
    table = Table(title=f"{result.sweep}-sweep")
    for column in COLUMNS:
        table.add_column(column, justify="right")
    for row in result.dataframe.to_dict("records"):
        table.add_row(*(_format(row[column]) for column in COLUMNS))
    rich.print(table)
    for N, p, stabilized in result.skipped:
        rich.print(f"[yellow]Skipped N={N}, p={p}, stabilized={stabilized}[/yellow]")


@with_exit_codes
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    values = StudyConfig.parse(StudyConfig.read(args.config))
    if args.override_assumption:
        values["override_assumption"] = True
    if args.output is not None:
        values["output"] = args.output
    config = StudyConfig(**values)

    show_progress = not args.no_progress
    if config.sweep == "h":
        result, slopes = run_h_sweep(config, args.num_workers, show_progress)
        print_records(result)
        table = Table(title="Fitted rates (last 3 points)")
        for column in ("stabilized", "quantity", "slope", "expected"):
            table.add_column(column, justify="right")
        for row in slopes.to_dict("records"):
            table.add_row(str(row["stabilized"]), row["quantity"], f"{row['slope']:.3f}", str(row["expected"]))
        rich.print(table)
    else:
        result, decay = run_p_sweep(config, args.num_workers, show_progress)
        print_records(result)
        for stabilized, diagnostic in decay.items():
            rich.print(
                f"stabilized={stabilized}: monotone={diagnostic.monotone}, "
                f"convex={diagnostic.convex}, {diagnostic.rate:.2f} digits per degree"
            )

    if config.output is not None and result.records:
        path = emit_csv(result.records, config.output)
        rich.print(f"Wrote {len(result.records)} records to {path}")
    return EXIT_OK


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
