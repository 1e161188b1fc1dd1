from abc import ABC, abstractmethod
from typing import Dict, Optional, Text

import rich
from rich.progress import BarColumn, Progress, TaskID, TextColumn, TimeElapsedColumn
from tqdm import tqdm


class ProgressBar(ABC):
    """Progress of a sweep, one tick per finished sweep point."""

    @abstractmethod
    def create(self, total: int, description: Optional[Text] = None, unit: Text = "run"):
        pass

    @abstractmethod
    def update(self, n: int = 1, status: Optional[Dict[Text, float]] = None):
        """Advance by ``n`` points and show the latest measured quantities."""
        pass

    @abstractmethod
    def write(self, text: Text):
        pass

    @abstractmethod
    def close(self):
        pass

    @staticmethod
    def format_status(status: Optional[Dict[Text, float]]) -> Text:
        if not status:
            return ""
        return ", ".join(f"{key}={value:.3e}" for key, value in status.items())


class RichProgressBar(ProgressBar):
    def __init__(self, color: Text = "green", leave: bool = True):
        self.color = color
        self.bar = Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TimeElapsedColumn(),
            TextColumn("{task.fields[status]}"),
            transient=not leave,
        )
        self.task_id: Optional[TaskID] = None

    def create(self, total: int, description: Optional[Text] = None, unit: Text = "run"):
        if self.task_id is None:
            self.bar.start()
            self.task_id = self.bar.add_task(
                f"[{self.color}]{description or 'Sweeping'}", total=total, status=""
            )

    def update(self, n: int = 1, status: Optional[Dict[Text, float]] = None):
        assert self.task_id is not None, "Call create() before update()"
        self.bar.update(self.task_id, advance=n, status=self.format_status(status))

    def write(self, text: Text):
        rich.print(text)

    def close(self):
        self.bar.stop()


class TQDMProgressBar(ProgressBar):
    """tqdm bar, positioned by worker index when sweeps run in parallel."""

    def __init__(self, leave: bool = True, position: Optional[int] = None):
        self.leave = leave
        self.position = position
        self.pbar: Optional[tqdm] = None

    def create(self, total: int, description: Optional[Text] = None, unit: Text = "run"):
        if self.pbar is None:
            self.pbar = tqdm(
                desc=description or "Sweeping",
                total=total,
                unit=unit,
                leave=self.leave,
                position=self.position,
            )

    def update(self, n: int = 1, status: Optional[Dict[Text, float]] = None):
        assert self.pbar is not None, "Call create() before update()"
        if status:
            self.pbar.set_postfix_str(self.format_status(status), refresh=False)
        self.pbar.update(n)

    def write(self, text: Text):
        tqdm.write(text)

    def close(self):
        if self.pbar is not None:
            self.pbar.close()


class SilentProgressBar(ProgressBar):
    def create(self, total: int, description: Optional[Text] = None, unit: Text = "run"):
        pass

    def update(self, n: int = 1, status: Optional[Dict[Text, float]] = None):
        pass

    def write(self, text: Text):
        pass

    def close(self):
        pass
