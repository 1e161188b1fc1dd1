import sys
from typing import List, Optional

import rich

from cutspec.console import EXIT_CONFIG, check_geometry, list_problems, oracle
from cutspec.console import run as run_study

COMMANDS = {
    "run": run_study.main,
    "list-problems": list_problems.main,
    "check-geometry": check_geometry.main,
    "oracle": oracle.main,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv or argv[0] not in COMMANDS:
        rich.print(f"Usage: cutspec {{{','.join(COMMANDS)}}} [options]", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[argv[0]](argv[1:])


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
