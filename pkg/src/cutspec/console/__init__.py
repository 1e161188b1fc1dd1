import logging
import sys
from functools import wraps
from typing import Callable, List, Optional

import rich

from ..errors import (
    AssumptionViolated,
    ConfigError,
    FactorizationFailed,
    GraphConditionViolated,
    InvalidDomain,
    NonConvergence,
    NotConverged,
    SingularMatrix,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GEOMETRY = 2
EXIT_SOLVER = 3

GEOMETRY_ERRORS = (AssumptionViolated, GraphConditionViolated, InvalidDomain)
SOLVER_ERRORS = (SingularMatrix, FactorizationFailed, NotConverged, NonConvergence)

Main = Callable[[Optional[List[str]]], int]


def configure_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def with_exit_codes(main: Main) -> Main:
    """Map library errors to the documented process exit codes."""

    @wraps(main)
    def wrapper(argv: Optional[List[str]] = None) -> int:
        try:
            return main(argv)
        except ConfigError as error:
            rich.print(f"[red]Configuration error:[/red] {error}", file=sys.stderr)
            return EXIT_CONFIG
        except GEOMETRY_ERRORS as error:
            rich.print(f"[red]Geometry error:[/red] {error}", file=sys.stderr)
            return EXIT_GEOMETRY
        except SOLVER_ERRORS as error:
            rich.print(f"[red]Solver failure:[/red] {error}", file=sys.stderr)
            return EXIT_SOLVER

    return wrapper
