import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Text, Tuple

import numpy as np
import pandas as pd

from .assembly import Field, JumpData
from .errors import UnknownProblem
from .geometry import LevelSet, Rectangle, Side
from .norms import ExactSolution

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
CIRCLE_EIGEN_REFERENCE = DATA_DIR / "circle_eigen_reference.csv"


@dataclass(frozen=True)
class SweepDefaults:
    """Default sweep parameters of a problem.

    Parameters
    ----------
    N: Sequence[int]
        Elements per side of the h-sweep.
    degree: int
        Polynomial degree of the h-sweep.
    p_sweep_N: int
        Elements per side of the p-sweep.
    p: Sequence[int]
        Degrees of the p-sweep.
    gamma_h: Tuple[float, float]
        (gamma_A, gamma_M) of the h-sweep.
    gamma_p: Tuple[float, float]
        (gamma_A, gamma_M) of the p-sweep.
    k: int
        Number of eigenvalues tracked (eigenproblems only).
    """

    N: Sequence[int] = (8, 16, 32, 64)
    degree: int = 3
    p_sweep_N: int = 16
    p: Sequence[int] = (2, 3, 4, 5, 6)
    gamma_h: Tuple[float, float] = (1.0, 0.01)
    gamma_p: Tuple[float, float] = (1.0, 0.01)
    k: int = 3

    def gamma(self, sweep: Text) -> Tuple[float, float]:
        return self.gamma_p if sweep == "p" else self.gamma_h


class Problem(ABC):
    """Interface problem on a square domain split by a level set.

    Parameters
    ----------
    alpha_plus: Optional[float]
        Diffusion coefficient in {phi > 0}. Defaults to the problem's value.
    alpha_minus: Optional[float]
        Diffusion coefficient in {phi < 0}. Defaults to the problem's value.
    domain: Optional[Rectangle]
        Defaults to the problem's domain.
    shift: Tuple[float, float]
        Translation applied to the interface. Defaults to (0, 0).
    """

    default_alpha: Tuple[float, float] = (1.0, 1.0)
    defaults = SweepDefaults()

    def __init__(
        self,
        alpha_plus: Optional[float] = None,
        alpha_minus: Optional[float] = None,
        domain: Optional[Rectangle] = None,
        shift: Tuple[float, float] = (0.0, 0.0),
    ):
        self.alpha_plus = self.default_alpha[0] if alpha_plus is None else alpha_plus
        self.alpha_minus = self.default_alpha[1] if alpha_minus is None else alpha_minus
        msg = f"Diffusion coefficients must be positive, but got {self.alpha_plus} and {self.alpha_minus}"
        assert self.alpha_plus > 0 and self.alpha_minus > 0, msg
        self.domain = self.default_domain() if domain is None else domain
        self.shift = tuple(shift)
        self.levelset = self.make_levelset()
        if any(self.shift):
            self.levelset = self.levelset.translated(self.shift)

    @property
    def name(self) -> Text:
        return type(self).__name__

    @property
    def is_eigen(self) -> bool:
        return False

    @property
    def alpha(self) -> Dict[Side, float]:
        return {Side.POS: self.alpha_plus, Side.NEG: self.alpha_minus}

    @staticmethod
    @abstractmethod
    def default_domain() -> Rectangle:
        pass

    @abstractmethod
    def make_levelset(self) -> LevelSet:
        pass

    @property
    def description(self) -> Text:
        return (self.__doc__ or "").strip()

    def _centered(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(x, dtype=float) - self.shift[0], np.asarray(y, dtype=float) - self.shift[1]


class SourceProblem(Problem):
    """Problem -div(alpha grad u) = f with a manufactured exact solution."""

    @abstractmethod
    def solution(self) -> ExactSolution:
        """Exact solution closures per side."""
        pass

    def exact(self) -> ExactSolution:
        return replace(self.solution(), jump=self.jump_data())

    @abstractmethod
    def source(self) -> Dict[Side, Field]:
        pass

    def jump_data(self) -> Optional[JumpData]:
        """Interface data, None for homogeneous jumps."""
        return None

    def interface_jumps(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """[u] and [alpha dn u] of the exact solution at interface points."""
        exact = self.solution()
        gx, gy = self.levelset.gradient(x, y)
        norm = np.hypot(gx, gy)
        nx, ny = gx / norm, gy / norm
        value_jump = exact.value[Side.POS](x, y) - exact.value[Side.NEG](x, y)
        fluxes = {}
        for side in (Side.POS, Side.NEG):
            ux, uy = exact.gradient[side](x, y)
            fluxes[side] = self.alpha[side] * (ux * nx + uy * ny)
        return value_jump, fluxes[Side.POS] - fluxes[Side.NEG]


class EigenProblem(Problem):
    """Problem -div(alpha grad u) = lambda u with homogeneous Dirichlet data."""

    @property
    def is_eigen(self) -> bool:
        return True

    @abstractmethod
    def reference_eigenvalues(self, k: int) -> Optional[np.ndarray]:
        """Reference spectrum, None when it must be computed by an oracle run."""
        pass


class CircleSource(SourceProblem):
    """Circular interface of radius 0.5 with a continuous radial solution."""

    default_alpha = (1000.0, 1.0)
    defaults = SweepDefaults()
    radius = 0.5

    @staticmethod
    def default_domain() -> Rectangle:
        return Rectangle(-1.0, 1.0, -1.0, 1.0)

    def make_levelset(self) -> LevelSet:
        return LevelSet.circle((0.0, 0.0), self.radius)

    def solution(self) -> ExactSolution:
        ap, am, r0 = self.alpha_plus, self.alpha_minus, self.radius
        # u = r^3 / alpha- inside, shifted outside so that [u] = 0 on r = r0
        offset = (1 / am - 1 / ap) * r0**3

        def cube(x, y):
            x, y = self._centered(x, y)
            return np.hypot(x, y) ** 3

        def cube_gradient(x, y):
            x, y = self._centered(x, y)
            r = np.hypot(x, y)
            return 3 * r * x, 3 * r * y

        def scaled_gradient(alpha):
            def gradient(x, y):
                gx, gy = cube_gradient(x, y)
                return gx / alpha, gy / alpha

            return gradient

        return ExactSolution(
            value={
                Side.NEG: lambda x, y: cube(x, y) / am,
                Side.POS: lambda x, y: cube(x, y) / ap + offset,
            },
            gradient={Side.NEG: scaled_gradient(am), Side.POS: scaled_gradient(ap)},
        )

    def source(self) -> Dict[Side, Field]:
        def f(x, y):
            x, y = self._centered(x, y)
            return -9 * np.hypot(x, y)

        return {Side.POS: f, Side.NEG: f}


class FlowerSource(SourceProblem):
    """Five-petal flower interface r = 1/2 + sin(5 theta) / 7 with nonhomogeneous jumps."""

    default_alpha = (10.0, 1.0)
    defaults = SweepDefaults(p_sweep_N=29)

    @staticmethod
    def default_domain() -> Rectangle:
        return Rectangle(-1.0, 1.0, -1.0, 1.0)

    def make_levelset(self) -> LevelSet:
        return LevelSet.flower((0.0, 0.0), 0.5, 1.0 / 7.0, 5)

    def solution(self) -> ExactSolution:
        def inner(x, y):
            x, y = self._centered(x, y)
            return np.exp(x**2 + y**2)

        def inner_gradient(x, y):
            x, y = self._centered(x, y)
            e = np.exp(x**2 + y**2)
            return 2 * x * e, 2 * y * e

        def outer(x, y):
            x, y = self._centered(x, y)
            r2 = x**2 + y**2
            return 0.1 * r2**2 - 0.01 * np.log(2 * np.sqrt(r2))

        def outer_gradient(x, y):
            x, y = self._centered(x, y)
            r2 = x**2 + y**2
            factor = 0.4 * r2 - 0.01 / r2
            return factor * x, factor * y

        return ExactSolution(
            value={Side.NEG: inner, Side.POS: outer},
            gradient={Side.NEG: inner_gradient, Side.POS: outer_gradient},
        )

    def source(self) -> Dict[Side, Field]:
        am, ap = self.alpha_minus, self.alpha_plus

        def f_minus(x, y):
            x, y = self._centered(x, y)
            r2 = x**2 + y**2
            return -am * 4 * (1 + r2) * np.exp(r2)

        def f_plus(x, y):
            x, y = self._centered(x, y)
            return -ap * 1.6 * (x**2 + y**2)

        return {Side.POS: f_plus, Side.NEG: f_minus}

    def jump_data(self) -> Optional[JumpData]:
        return JumpData(
            dirichlet=lambda x, y: self.interface_jumps(x, y)[0],
            neumann=lambda x, y: self.interface_jumps(x, y)[1],
        )


class PlainPoisson(SourceProblem):
    """No interface: -Laplace u = 2 sin x sin y on (0, pi)^2."""

    defaults = SweepDefaults(N=(4, 8, 16, 32), p_sweep_N=4, p=(2, 3, 4, 5, 6, 7, 8))

    @staticmethod
    def default_domain() -> Rectangle:
        return Rectangle(0.0, np.pi, 0.0, np.pi)

    def make_levelset(self) -> LevelSet:
        return LevelSet.constant(-1.0)

    def solution(self) -> ExactSolution:
        return ExactSolution.smooth(
            lambda x, y: np.sin(x) * np.sin(y),
            lambda x, y: (np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)),
        )

    def source(self) -> Dict[Side, Field]:
        def f(x, y):
            return 2 * self.alpha_minus * np.sin(x) * np.sin(y)

        return {Side.POS: f, Side.NEG: f}


class CircleEigen(EigenProblem):
    """Circle of radius pi/4 centered in (0, pi)^2, Dirichlet eigenvalues."""

    default_alpha = (1000.0, 1.0)
    defaults = SweepDefaults(
        N=(8, 16, 24, 32), gamma_h=(4.1, 0.002), gamma_p=(0.1, 0.05), k=3
    )
    reference_N = 96
    reference_degree = 4

    @staticmethod
    def default_domain() -> Rectangle:
        return Rectangle(0.0, np.pi, 0.0, np.pi)

    def make_levelset(self) -> LevelSet:
        return LevelSet.circle((0.5 * np.pi, 0.5 * np.pi), 0.25 * np.pi)

    def reference_eigenvalues(self, k: int) -> Optional[np.ndarray]:
        table = read_reference(CIRCLE_EIGEN_REFERENCE)
        if table is None:
            return None
        matches = (
            np.isclose(table["alpha_plus"], self.alpha_plus).all()
            and np.isclose(table["alpha_minus"], self.alpha_minus).all()
            and self.domain == self.default_domain()
            and not any(self.shift)
        )
        if not matches or len(table) < k:
            logger.warning(
                f"Pinned reference eigenvalues in {CIRCLE_EIGEN_REFERENCE.name} "
                f"don't match this configuration"
            )
            return None
        return table["eigenvalue"].to_numpy()[:k]


class PlainEigen(EigenProblem):
    """No interface: Dirichlet Laplacian on (0, pi)^2 with spectrum m^2 + n^2."""

    defaults = SweepDefaults(N=(2, 4, 8, 16), p_sweep_N=4, p=(2, 3, 4, 5, 6, 7, 8), k=6)

    @staticmethod
    def default_domain() -> Rectangle:
        return Rectangle(0.0, np.pi, 0.0, np.pi)

    def make_levelset(self) -> LevelSet:
        return LevelSet.constant(-1.0)

    def reference_eigenvalues(self, k: int) -> Optional[np.ndarray]:
        n = int(np.ceil(np.sqrt(k))) + 2
        m = np.arange(1, n + 1)
        spectrum = np.sort((m[:, None] ** 2 + m[None, :] ** 2).ravel())
        return self.alpha_minus * spectrum[:k].astype(float)


REGISTRY: Dict[Text, type] = {
    cls.__name__: cls
    for cls in (CircleSource, FlowerSource, CircleEigen, PlainPoisson, PlainEigen)
}


def list_problems() -> List[Text]:
    return list(REGISTRY)


def get_problem_class(name: Text) -> type:
    problem_class = REGISTRY.get(name, None)
    if problem_class is None:
        raise UnknownProblem(name, list_problems())
    return problem_class


def registry_problem(name: Text, **kwargs) -> Problem:
    """Fully populated problem definition by registry name.

    Parameters
    ----------
    name: Text
        One of ``list_problems()``.
    kwargs:
        Overrides forwarded to the problem constructor
        (alpha_plus, alpha_minus, domain, shift).

    Returns
    -------
    problem: Problem
    """
    return get_problem_class(name)(**kwargs)


def read_reference(path: Path) -> Optional[pd.DataFrame]:
    """Pinned eigenvalue table, None if it doesn't exist."""
    if not Path(path).exists():
        return None
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def write_reference(
    path: Path,
    eigenvalues: Sequence[float],
    problem: Problem,
    N: int,
    degree: int,
    gamma_A: float,
    gamma_M: float,
    command: Text,
):
    """Pin eigenvalues to a csv file, headed by the command that produced them."""
    table = pd.DataFrame(
        {
            "index": np.arange(1, len(eigenvalues) + 1),
            "eigenvalue": np.asarray(eigenvalues, dtype=float),
            "N": N,
            "p": degree,
            "alpha_plus": problem.alpha_plus,
            "alpha_minus": problem.alpha_minus,
            "gamma_A": gamma_A,
            "gamma_M": gamma_M,
        }
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as file:
        file.write(f"# Generated by: {command}\n")
        table.to_csv(file, index=False, float_format="%.17g")
