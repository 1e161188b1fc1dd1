import logging
import os
import time
from typing import List, Optional, Text

THREADS_VARIABLE = "CUTSPEC_THREADS"


class Chronometer:
    """Wall-clock timer of a repeated unit of work."""

    def __init__(self, unit: Text):
        self.unit = unit
        self.current_start_time: Optional[float] = None
        self.history: List[float] = []

    def start(self):
        self.current_start_time = time.monotonic()

    def stop(self, do_count: bool = True) -> float:
        msg = "No start time available, Did you call stop() before start()?"
        assert self.current_start_time is not None, msg
        elapsed = time.monotonic() - self.current_start_time
        self.current_start_time = None
        if do_count:
            self.history.append(elapsed)
        return elapsed


def get_num_workers(num_workers: Optional[int] = None) -> int:
    """Number of concurrent sweep jobs.

    Reads CUTSPEC_THREADS when ``num_workers`` is None. 0 or an unset
    variable means one worker per CPU.
    """
    if num_workers is None:
        value = os.environ.get(THREADS_VARIABLE, "0")
        try:
            num_workers = int(value)
        except ValueError:
            logging.warning(f"Ignoring invalid {THREADS_VARIABLE}={value!r}")
            num_workers = 0
    if num_workers <= 0:
        num_workers = os.cpu_count() or 1
    return num_workers
