
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Text, Union

from typing_extensions import Literal

from . import problems
from .errors import ConfigError, UnknownProblem
from .geometry import Rectangle
from .solvers import DEFAULT_SEED

Stabilization = Union[bool, Literal["both"]]

INT_LISTS = {"N", "p"}
FLOATS = {"x0", "x1", "y0", "y1", "alpha_plus", "alpha_minus", "gamma_A", "gamma_M"}
INTS = {"q", "k", "seed"}
BOOLS = {"override_assumption", "condition"}
STRINGS = {"problem", "sweep", "output"}
KEYS = INT_LISTS | FLOATS | INTS | BOOLS | STRINGS | {"stabilization"}


def _parse_bool(key: Text, text: Text) -> bool:
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise ConfigError(f"Key '{key}' expects true or false, but got '{text}'")


def _parse_value(key: Text, text: Text) -> Any:
    try:
        if key in INT_LISTS:
            return [int(item) for item in text.split(",") if item.strip()]
        if key in FLOATS:
            return float(text)
        if key in INTS:
            return int(text, 0)
    except ValueError as error:
        raise ConfigError(f"Invalid value for '{key}': {text}") from error
    if key in BOOLS:
        return _parse_bool(key, text)
    if key == "stabilization":
        return "both" if text.lower() == "both" else _parse_bool(key, text)
    return text


def _is_strictly_monotone(values: Sequence[int]) -> bool:
    steps = [b - a for a, b in zip(values[:-1], values[1:])]
    return all(s > 0 for s in steps) or all(s < 0 for s in steps)


class StudyConfig:
    """Parameters of a convergence study.

    Omitted values fall back to the defaults of the chosen problem.

    Parameters
    ----------
    problem: Text
        Registry name of the problem.
    sweep: Text
        'h' to refine the mesh at a fixed degree, 'p' to raise the degree
        on a fixed mesh. Defaults to 'h'.
    N: Optional[Sequence[int]]
        Elements per side. A list for h-sweeps, a single value for p-sweeps.
    p: Optional[Sequence[int]]
        Polynomial degrees. A single value for h-sweeps, a list for p-sweeps.
    x0, x1, y0, y1: Optional[float]
        Domain override.
    alpha_plus, alpha_minus: Optional[float]
        Diffusion coefficient overrides.
    gamma_A, gamma_M: Optional[float]
        Ghost-penalty scalings of the stiffness and mass forms.
    stabilization: bool | 'both'
        Whether to add the ghost penalty. 'both' runs each point twice.
        Defaults to True.
    q: Optional[int]
        Gauss points per direction used for assembly. Defaults to p + 3.
    k: Optional[int]
        Number of eigenvalues (eigenproblems only).
    output: Optional[Text]
        Path of the csv report.
    seed: int
        Seed of the Lanczos start vectors. Defaults to 0x5EED.
    override_assumption: bool
        Skip meshes that violate the interface assumption instead of failing.
    condition: bool
        Whether to estimate condition numbers. Defaults to True.
    """

    def __init__(
        self,
        problem: Text,
        sweep: Text = "h",
        N: Optional[Union[Sequence[int], int]] = None,
        p: Optional[Union[Sequence[int], int]] = None,
        x0: Optional[float] = None,
        x1: Optional[float] = None,
        y0: Optional[float] = None,
        y1: Optional[float] = None,
        alpha_plus: Optional[float] = None,
        alpha_minus: Optional[float] = None,
        gamma_A: Optional[float] = None,
        gamma_M: Optional[float] = None,
        stabilization: Stabilization = True,
        q: Optional[int] = None,
        k: Optional[int] = None,
        output: Optional[Union[Text, Path]] = None,
        seed: int = DEFAULT_SEED,
        override_assumption: bool = False,
        condition: bool = True,
        **kwargs,
    ):
        try:
            self.problem_class = problems.get_problem_class(problem)
        except UnknownProblem as error:
            raise ConfigError(str(error)) from error
        self.problem_name = problem
        if sweep not in ("h", "p"):
            raise ConfigError(f"Sweep must be 'h' or 'p', but got '{sweep}'")
        self.sweep = sweep
        defaults = self.problem_class.defaults

        bounds = (x0, x1, y0, y1)
        if all(b is None for b in bounds):
            self.domain = None
        elif any(b is None for b in bounds):
            raise ConfigError("Domain overrides need all of x0, x1, y0 and y1")
        else:
            try:
                self.domain = Rectangle(x0, x1, y0, y1)
            except ValueError as error:
                raise ConfigError(str(error)) from error

        if sweep == "h":
            self.N = self._as_list(N, defaults.N)
            self.p = self._as_list(p, [defaults.degree])
            fixed, fixed_name = self.p, "p"
            varying, varying_name = self.N, "N"
        else:
            self.N = self._as_list(N, [defaults.p_sweep_N])
            self.p = self._as_list(p, defaults.p)
            fixed, fixed_name = self.N, "N"
            varying, varying_name = self.p, "p"
        if len(fixed) != 1:
            raise ConfigError(f"A {sweep}-sweep takes a single value of {fixed_name}, but got {fixed}")
        if not varying:
            raise ConfigError(f"The list of {varying_name} values is empty")
        if not _is_strictly_monotone(varying):
            raise ConfigError(f"{varying_name} values must be strictly monotone, but got {varying}")
        if any(n < 2 for n in self.N) or any(d < 1 for d in self.p):
            raise ConfigError(f"Need N >= 2 and p >= 1, but got N={self.N} and p={self.p}")

        alpha = self.problem_class.default_alpha
        self.alpha_plus = alpha[0] if alpha_plus is None else float(alpha_plus)
        self.alpha_minus = alpha[1] if alpha_minus is None else float(alpha_minus)
        if not (self.alpha_plus > 0 and self.alpha_minus > 0):
            raise ConfigError(
                f"Diffusion coefficients must be positive, but got {self.alpha_plus} and {self.alpha_minus}"
            )

        default_gamma_A, default_gamma_M = defaults.gamma(sweep)
        self.gamma_A = default_gamma_A if gamma_A is None else float(gamma_A)
        self.gamma_M = default_gamma_M if gamma_M is None else float(gamma_M)
        if self.gamma_A < 0 or self.gamma_M < 0:
            raise ConfigError("Stabilization constants must be non-negative")

        if stabilization not in (True, False, "both"):
            raise ConfigError(f"Stabilization must be true, false or both, but got '{stabilization}'")
        self.stabilization = stabilization
        self.q = q
        if q is not None and q < max(self.p) + 1:
            raise ConfigError(f"q={q} is too small for degree {max(self.p)}")
        self.k = defaults.k if k is None else int(k)
        if self.k < 1:
            raise ConfigError(f"Need at least one eigenvalue, but got k={self.k}")
        self.output = None if output is None else Path(output)
        self.seed = seed
        self.override_assumption = override_assumption
        self.condition = condition

    @staticmethod
    def _as_list(value: Optional[Union[Sequence[int], int]], default: Sequence[int]) -> List[int]:
        if value is None:
            return list(default)
        if isinstance(value, int):
            return [value]
        return [int(v) for v in value]

    @property
    def stabilization_modes(self) -> List[bool]:
        if self.stabilization == "both":
            return [True, False]
        return [bool(self.stabilization)]

    def make_problem(self) -> problems.Problem:
        return self.problem_class(
            alpha_plus=self.alpha_plus, alpha_minus=self.alpha_minus, domain=self.domain
        )

    def as_dict(self) -> Dict[Text, Any]:
        return {
            "problem": self.problem_name,
            "sweep": self.sweep,
            "N": self.N,
            "p": self.p,
            "alpha_plus": self.alpha_plus,
            "alpha_minus": self.alpha_minus,
            "gamma_A": self.gamma_A,
            "gamma_M": self.gamma_M,
            "stabilization": self.stabilization,
            "q": self.q,
            "k": self.k,
            "seed": self.seed,
        }

    @staticmethod
    def parse(text: Text) -> Dict[Text, Any]:
        """Read flat ``key = value`` lines. '#' starts a comment."""
        values = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"Line {number}: expected 'key = value', got '{raw.strip()}'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"Line {number}: unknown key '{key}'")
            if key in values:
                raise ConfigError(f"Line {number}: duplicate key '{key}'")
            values[key] = _parse_value(key, value)
        if "problem" not in values:
            raise ConfigError("Missing required key 'problem'")
        return values

    @staticmethod
    def read(path: Union[Text, Path]) -> Text:
        path = Path(path).expanduser()
        try:
            return path.read_text()
        except OSError as error:
            raise ConfigError(f"Can't read config file {path}: {error}") from error

    @staticmethod
    def from_file(path: Union[Text, Path]) -> "StudyConfig":
        return StudyConfig(**StudyConfig.parse(StudyConfig.read(path)))
