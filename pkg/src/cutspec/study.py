import logging
from dataclasses import dataclass, field
from multiprocessing import Pool, RLock, current_process, freeze_support
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Text, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from .assembly import apply_dirichlet, assemble_load, assemble_operators, free_dofs
from .basis import Basis2D
from .config import StudyConfig
from .errors import AssumptionViolated, MalformedReport, NoRecords
from .geometry import CutMesh, Side, build_mesh, check_interface_assumption, classify_elements
from .norms import DiscreteFunction, broken_h1_error, broken_l2_error, eigenvalue_errors
from .problems import EigenProblem, Problem, SourceProblem
from .progress import ProgressBar, RichProgressBar, SilentProgressBar, TQDMProgressBar
from .solvers import DEFAULT_SEED, EigenResult, condition_estimate, solve_smallest_eigs, solve_source
from .utils import Chronometer, get_num_workers

logger = logging.getLogger(__name__)

COLUMNS = [
    "problem", "N", "h", "p", "dofs", "stabilized",
    "l2", "h1", "eig1", "eig2", "eig3", "condA", "condM", "runtime",
]
EIGEN_COLUMNS = ["eig1", "eig2", "eig3"]
# Slopes are fitted on the last sweep points, earlier ones are preasymptotic
SLOPE_POINTS = 3
ORACLE_N = 96
ORACLE_DEGREE = 4


@dataclass
class ConvergenceRecord:
    """One point of a convergence sweep.

    Quantities that don't apply to the problem (L2 error of an eigenproblem,
    skipped condition numbers) are NaN.
    """

    problem: Text
    N: int
    h: float
    p: int
    dofs: int
    stabilized: bool
    l2: float = float("nan")
    h1: float = float("nan")
    eig_errors: List[float] = field(default_factory=list)
    cond_A: float = float("nan")
    cond_M: float = float("nan")
    runtime: float = 0.0
    eigenvalues: List[float] = field(default_factory=list)

    @property
    def sort_key(self) -> Tuple[int, int, bool]:
        return self.N, self.p, not self.stabilized

    def to_row(self) -> Dict[Text, Union[Text, int, float, bool]]:
        errors = list(self.eig_errors[: len(EIGEN_COLUMNS)])
        errors += [float("nan")] * (len(EIGEN_COLUMNS) - len(errors))
        row = {
            "problem": self.problem,
            "N": int(self.N),
            "h": float(self.h),
            "p": int(self.p),
            "dofs": int(self.dofs),
            "stabilized": bool(self.stabilized),
            "l2": float(self.l2),
            "h1": float(self.h1),
            "condA": float(self.cond_A),
            "condM": float(self.cond_M),
            "runtime": float(self.runtime),
        }
        row.update({name: float(e) for name, e in zip(EIGEN_COLUMNS, errors)})
        return {column: row[column] for column in COLUMNS}

    @staticmethod
    def from_row(row: Dict) -> "ConvergenceRecord":
        errors = [float(row[name]) for name in EIGEN_COLUMNS]
        while errors and np.isnan(errors[-1]):
            errors.pop()
        return ConvergenceRecord(
            problem=str(row["problem"]),
            N=int(row["N"]),
            h=float(row["h"]),
            p=int(row["p"]),
            dofs=int(row["dofs"]),
            stabilized=bool(row["stabilized"]),
            l2=float(row["l2"]),
            h1=float(row["h1"]),
            eig_errors=errors,
            cond_A=float(row["condA"]),
            cond_M=float(row["condM"]),
            runtime=float(row["runtime"]),
        )


@dataclass
class RunResult:
    record: ConvergenceRecord
    solution: Optional[DiscreteFunction] = None
    eigen: Optional[EigenResult] = None


def prepare_mesh(problem: Problem, N: int, override_assumption: bool = False) -> CutMesh:
    """Classified mesh of the problem, checked against the interface assumption."""
    mesh = classify_elements(build_mesh(problem.domain, N), problem.levelset)
    report = check_interface_assumption(mesh, problem.levelset)
    if not report.ok:
        if not override_assumption:
            raise AssumptionViolated(report.violations)
        logger.warning(
            f"{problem.name} N={N}: interface assumption violated in "
            f"{len(report.violations)} elements, continuing as requested"
        )
    return mesh


def run_single(
    problem: Problem,
    N: int,
    p: int,
    stabilized: bool = True,
    gamma_A: float = 1.0,
    gamma_M: float = 0.01,
    q: Optional[int] = None,
    k: int = 3,
    reference: Optional[Sequence[float]] = None,
    condition: bool = True,
    seed: int = DEFAULT_SEED,
    override_assumption: bool = False,
) -> RunResult:
    """Discretize and solve a problem on one mesh with one degree.

    Parameters
    ----------
    problem: Problem
    N: int
        Elements per side.
    p: int
        Polynomial degree.
    stabilized: bool
        Whether to add the ghost penalty. Defaults to True.
    gamma_A, gamma_M: float
        Ghost-penalty scalings.
    q: Optional[int]
        Gauss points per direction for assembly. Defaults to p + 3.
        Errors are measured with two more points.
    k: int
        Number of eigenvalues (eigenproblems only).
    reference: Optional[Sequence[float]]
        Reference eigenvalues used for the error columns.
    condition: bool
        Whether to estimate condition numbers.
    seed: int
        Seed of the Lanczos start vectors.
    override_assumption: bool
        Continue when the mesh violates the interface assumption.

    Returns
    -------
    result: RunResult
    """
    chronometer = Chronometer("run")
    chronometer.start()
    mesh = prepare_mesh(problem, N, override_assumption)
    basis = Basis2D(p)
    q = p + 3 if q is None else q
    operators = assemble_operators(mesh, basis, problem.alpha_plus, problem.alpha_minus, q)
    dofmap = operators.dofmap
    if stabilized:
        A, M = operators.extended(gamma_A, gamma_M)
    else:
        A, M = operators.stiffness, operators.mass

    record = ConvergenceRecord(problem.name, N, mesh.h, p, dofmap.num_dofs, stabilized)
    result = RunResult(record)

    if isinstance(problem, SourceProblem):
        exact, source = problem.exact(), problem.source()
        load = assemble_load(
            mesh,
            dofmap,
            basis,
            problem.levelset,
            source[Side.POS],
            source[Side.NEG],
            jump=problem.jump_data(),
            alpha_plus=problem.alpha_plus,
            alpha_minus=problem.alpha_minus,
            quadrature=operators.quadrature,
        )
        system = apply_dirichlet(A, load, dofmap, boundary_values=dofmap.interpolate(exact.value))
        report = solve_source(system.matrix, system.vector)
        result.solution = DiscreteFunction(dofmap, system.expand(report.coefficients))
        record.l2 = broken_l2_error(result.solution, exact, mesh, problem.levelset, q + 2)
        record.h1 = broken_h1_error(result.solution, exact, mesh, problem.levelset, q + 2)
        if condition:
            record.cond_A = condition_estimate(system.matrix, seed)
            record.cond_M = condition_estimate(apply_dirichlet(M, None, dofmap, free=system.free).matrix, seed)
    else:
        free = free_dofs(dofmap, A, M)
        reduced_A = apply_dirichlet(A, None, dofmap, free=free)
        reduced_M = apply_dirichlet(M, None, dofmap, free=free)
        eigen = solve_smallest_eigs(reduced_A.matrix, reduced_M.matrix, k, seed)
        result.eigen = EigenResult(
            eigen.eigenvalues, reduced_A.expand(eigen.eigenvectors), eigen.residuals, eigen.method
        )
        record.eigenvalues = eigen.eigenvalues.tolist()
        if reference is not None:
            record.eig_errors = eigenvalue_errors(eigen.eigenvalues, reference[:k]).tolist()
        if condition:
            record.cond_A = condition_estimate(reduced_A.matrix, seed)
            record.cond_M = condition_estimate(reduced_M.matrix, seed)

    record.runtime = chronometer.stop()
    logger.debug(f"{problem.name} N={N} p={p} stabilized={stabilized}: {record.runtime:.2f}s")
    return result


def fit_slope(h: Sequence[float], errors: Sequence[float], last: int = SLOPE_POINTS) -> float:
    """Least-squares slope of log(error) against log(h) over the last points.

    NaN when fewer than two usable points remain.
    """
    h, errors = np.asarray(h, dtype=float)[-last:], np.asarray(errors, dtype=float)[-last:]
    usable = np.isfinite(errors) & (errors > 0)
    if np.sum(usable) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h[usable]), np.log(errors[usable]), 1)
    return float(slope)


@dataclass(frozen=True)
class SpectralDecay:
    """Shape of log(error) as a function of the polynomial degree.

    Parameters
    ----------
    monotone: bool
        Errors strictly decrease with p.
    convex: bool
        Second differences of log(error) are non-negative up to a tolerance.
    curvature: float
        Mean second difference of log(error), 0 for pure exponential decay.
    rate: float
        Mean decrease of log10(error) per degree.
    """

    monotone: bool
    convex: bool
    curvature: float
    rate: float


def spectral_decay(p: Sequence[int], errors: Sequence[float], tolerance: float = 1e-8) -> SpectralDecay:
    p = np.asarray(p, dtype=float)
    logs = np.log10(np.asarray(errors, dtype=float))
    steps = np.diff(logs) / np.diff(p)
    second = np.diff(steps)
    curvature = float(np.mean(second)) if len(second) else 0.0
    return SpectralDecay(
        monotone=bool(np.all(steps < 0)),
        convex=bool(np.all(second >= -tolerance)),
        curvature=curvature,
        rate=float(-np.mean(steps)) if len(steps) else 0.0,
    )


def expected_rates(p: int) -> Dict[Text, float]:
    """Asymptotic rates in h for smooth solutions of degree-p approximations."""
    return {"l2": p + 1, "h1": p, "eig1": 2 * p, "eig2": 2 * p, "eig3": 2 * p, "condA": -2, "condM": 0}


def to_dataframe(records: Sequence[ConvergenceRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.to_row() for record in records], columns=COLUMNS)


def emit_csv(records: Sequence[ConvergenceRecord], path: Union[Text, Path]) -> Path:
    """Write records to csv, ordered by (N, p), stabilized runs first.

    Floats are written in shortest round-trip form.
    """
    if not records:
        raise NoRecords("There are no records to write")
    path = Path(path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: r.sort_key)
    to_dataframe(ordered).to_csv(path, index=False)
    return path


def read_csv(path: Union[Text, Path]) -> List[ConvergenceRecord]:
    table = pd.read_csv(Path(path).expanduser(), float_precision="round_trip")
    missing = [column for column in COLUMNS if column not in table.columns]
    if missing:
        raise MalformedReport(f"Missing columns in {path}: {', '.join(missing)}")
    return [ConvergenceRecord.from_row(row) for row in table.to_dict("records")]


def slopes_table(records: Sequence[ConvergenceRecord]) -> pd.DataFrame:
    """Fitted rates against h for each stabilization mode of an h-sweep."""
    table = to_dataframe(records)
    rows = []
    for stabilized, group in table.groupby("stabilized", sort=False):
        group = group.sort_values("N")
        expected = expected_rates(int(group["p"].iloc[-1]))
        for quantity in ("l2", "h1", "eig1", "eig2", "eig3", "condA", "condM"):
            slope = fit_slope(group["h"], group[quantity])
            if np.isnan(slope):
                continue
            rows.append(
                {"stabilized": stabilized, "quantity": quantity, "slope": slope, "expected": expected[quantity]}
            )
    return pd.DataFrame(rows, columns=["stabilized", "quantity", "slope", "expected"])


_ORACLE_CACHE: Dict[Tuple, np.ndarray] = {}


def compute_reference_eigenvalues(
    problem: EigenProblem,
    k: int,
    N: int = ORACLE_N,
    p: int = ORACLE_DEGREE,
    gamma_A: Optional[float] = None,
    gamma_M: Optional[float] = None,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """Fine-grid stabilized eigenvalues used as reference spectrum."""
    default_A, default_M = problem.defaults.gamma("h")
    gamma_A = default_A if gamma_A is None else gamma_A
    gamma_M = default_M if gamma_M is None else gamma_M
    key = (problem.name, problem.alpha_plus, problem.alpha_minus, problem.domain, problem.shift, k, N, p, gamma_A, gamma_M)
    if key not in _ORACLE_CACHE:
        result = run_single(problem, N, p, True, gamma_A, gamma_M, k=k, condition=False, seed=seed)
        _ORACLE_CACHE[key] = np.asarray(result.record.eigenvalues)
    return _ORACLE_CACHE[key]


def resolve_reference(problem: EigenProblem, k: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    reference = problem.reference_eigenvalues(k)
    if reference is None:
        logger.warning(
            f"No pinned reference spectrum for {problem.name}, running the "
            f"N={ORACLE_N}, p={ORACLE_DEGREE} oracle. This may take a while"
        )
        reference = compute_reference_eigenvalues(problem, k, seed=seed)
    return np.asarray(reference, dtype=float)


@dataclass
class StudyResult:
    records: List[ConvergenceRecord]
    sweep: Text
    skipped: List[Tuple[int, int, bool]] = field(default_factory=list)

    @property
    def dataframe(self) -> pd.DataFrame:
        return to_dataframe(self.records)

    def slopes(self) -> pd.DataFrame:
        return slopes_table(self.records)

    def decay(self, quantity: Text = "l2", stabilized: bool = True) -> SpectralDecay:
        table = self.dataframe
        table = table[table["stabilized"] == stabilized].sort_values("p")
        return spectral_decay(table["p"], table[quantity])


Job = Tuple[int, int, bool]


class ConvergenceStudy:
    """Run every (N, p, stabilization) point of a config.

    Parameters
    ----------
    config: StudyConfig
    show_progress: bool
        Whether to show a progress bar. Defaults to True.
    """

    def __init__(self, config: StudyConfig, show_progress: bool = True):
        self.config = config
        self.show_progress = show_progress
        self.reference: Optional[np.ndarray] = None
        if issubclass(config.problem_class, EigenProblem):
            self.reference = resolve_reference(config.make_problem(), config.k, config.seed)

    def get_jobs(self) -> List[Job]:
        return [
            (N, p, stabilized)
            for N in self.config.N
            for p in self.config.p
            for stabilized in self.config.stabilization_modes
        ]

    def run_single(self, job: Job, problem: Optional[Problem] = None) -> Optional[ConvergenceRecord]:
        """Run one sweep point. None if its mesh violates the interface
        assumption and the config allows skipping it."""
        N, p, stabilized = job
        problem = self.config.make_problem() if problem is None else problem
        try:
            result = run_single(
                problem,
                N,
                p,
                stabilized,
                self.config.gamma_A,
                self.config.gamma_M,
                q=self.config.q,
                k=self.config.k,
                reference=self.reference,
                condition=self.config.condition,
                seed=self.config.seed,
            )
        except AssumptionViolated as error:
            if not self.config.override_assumption:
                raise
            logger.warning(f"Skipping N={N}, p={p}: {error}")
            return None
        return result.record

    def collect(self, jobs: Sequence[Job], records: Sequence[Optional[ConvergenceRecord]]) -> StudyResult:
        kept = [r for r in records if r is not None]
        skipped = [job for job, r in zip(jobs, records) if r is None]
        return StudyResult(sorted(kept, key=lambda r: r.sort_key), self.config.sweep, skipped)

    def __call__(self, progress_bar: Optional[ProgressBar] = None) -> StudyResult:
        jobs = self.get_jobs()
        if progress_bar is None:
            progress_bar = RichProgressBar(leave=False) if self.show_progress else SilentProgressBar()
        progress_bar.create(total=len(jobs), description=f"{self.config.problem_name} {self.config.sweep}-sweep")
        problem = self.config.make_problem()
        records = []
        for job in jobs:
            record = self.run_single(job, problem)
            records.append(record)
            status = None
            if record is not None:
                status = {"l2": record.l2} if not problem.is_eigen else {"eig1": (record.eig_errors or [np.nan])[0]}
            progress_bar.update(status=status)
        progress_bar.close()
        return self.collect(jobs, records)


class Parallelize:
    """Wrapper to run the points of a `ConvergenceStudy` concurrently.
    Each worker rebuilds the problem from the config.

    Parameters
    ----------
    study: ConvergenceStudy
    num_workers: Optional[int]
        Number of parallel workers. Defaults to CUTSPEC_THREADS
        (one per CPU when unset or 0).
    """

    def __init__(self, study: ConvergenceStudy, num_workers: Optional[int] = None):
        self.study = study
        self.num_workers = get_num_workers(num_workers)

    def run_single_job(self, job: Job, description: Text) -> Optional[ConvergenceRecord]:
        # The process ID inside the pool determines the position of the progress bar
        idx_process = int(current_process().name.split("-")[1]) - 1
        progress = TQDMProgressBar(leave=False, position=idx_process)
        progress.create(total=1, description=description)
        record = self.study.run_single(job)
        progress.update()
        progress.close()
        return record

    def __call__(self) -> StudyResult:
        jobs = self.study.get_jobs()
        if self.num_workers == 1 or len(jobs) == 1:
            return self.study()

        # For Windows support
        freeze_support()

        # Create the pool of workers using a lock for parallel tqdm usage
        pool = Pool(
            processes=min(self.num_workers, len(jobs)), initargs=(RLock(),), initializer=tqdm.set_lock
        )
        arg_list = [
            (job, f"N={job[0]} p={job[1]}{'' if job[2] else ' (no GP)'}")
            for job in jobs
        ]
        handles = [pool.apply_async(self.run_single_job, args=args) for args in arg_list]

        # Wait and collect results
        pool.close()
        try:
            records = [handle.get() for handle in handles]
        finally:
            pool.join()
        return self.study.collect(jobs, records)


def run_study(
    config: StudyConfig, num_workers: Optional[int] = None, show_progress: bool = True
) -> StudyResult:
    study = ConvergenceStudy(config, show_progress)
    return Parallelize(study, num_workers)()


def run_h_sweep(
    config: StudyConfig, num_workers: Optional[int] = None, show_progress: bool = True
) -> Tuple[StudyResult, pd.DataFrame]:
    """One record per N plus the fitted slopes of every error column."""
    msg = f"Expected an h-sweep config, but got a {config.sweep}-sweep"
    assert config.sweep == "h", msg
    result = run_study(config, num_workers, show_progress)
    return result, result.slopes()


def run_p_sweep(
    config: StudyConfig, num_workers: Optional[int] = None, show_progress: bool = True
) -> Tuple[StudyResult, Dict[bool, SpectralDecay]]:
    """One record per p plus the spectral-decay diagnostic of each stabilization mode."""
    msg = f"Expected a p-sweep config, but got a {config.sweep}-sweep"
    assert config.sweep == "p", msg
    result = run_study(config, num_workers, show_progress)
    quantity = "eig1" if issubclass(config.problem_class, EigenProblem) else "l2"
    decay = {}
    for stabilized in config.stabilization_modes:
        if any(r.stabilized == stabilized for r in result.records):
            decay[stabilized] = result.decay(quantity, stabilized)
    return result, decay
