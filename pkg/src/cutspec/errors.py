from typing import Optional, Sequence, Text, Tuple

import numpy as np


class CutSpecError(Exception):
    pass


class NonConvergence(CutSpecError, ArithmeticError):
    pass


class NoSignChange(CutSpecError, ValueError):
    pass


class InvalidDomain(CutSpecError, ValueError):
    pass


class GraphConditionViolated(CutSpecError, ValueError):
    """The interface is not a graph over the base direction chosen for an element."""

    def __init__(self, element: Tuple[int, int], num_roots: int):
        self.element = element
        self.num_roots = num_roots
        super().__init__(
            f"Element {element}: found {num_roots} height roots in a single column. "
            f"Refine the mesh so that the interface is a local graph"
        )


class AssumptionViolated(CutSpecError, ValueError):
    def __init__(self, violations: Sequence[Tuple[int, int]]):
        self.violations = list(violations)
        shown = ", ".join(str(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(
            f"Interface crosses the boundary of {len(self.violations)} "
            f"interface elements more than twice or not at all: {shown}{more}"
        )


class DegenerateElement(CutSpecError, ValueError):
    pass


class DimensionMismatch(CutSpecError, ValueError):
    pass


class LengthMismatch(CutSpecError, ValueError):
    pass


class UnknownProblem(CutSpecError, KeyError):
    def __init__(self, name: Text, available: Sequence[Text]):
        self.name = name
        self.available = list(available)
        super().__init__(
            f"Problem '{name}' doesn't exist. Choose one of: {', '.join(self.available)}"
        )

    def __str__(self) -> Text:
        return self.args[0]


class ConfigError(CutSpecError, ValueError):
    pass


class SingularMatrix(CutSpecError, ArithmeticError):
    pass


class FactorizationFailed(CutSpecError, RuntimeError):
    pass


class NotConverged(CutSpecError, RuntimeError):
    """Eigensolver stopped early. Converged pairs found so far are kept."""

    def __init__(
        self,
        message: Text,
        eigenvalues: Optional[np.ndarray] = None,
        eigenvectors: Optional[np.ndarray] = None,
    ):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors


class IllConditioned(RuntimeWarning):
    pass


class NoRecords(CutSpecError, ValueError):
    pass


class MalformedReport(CutSpecError, ValueError):
    pass
