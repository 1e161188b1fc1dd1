import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu
from scipy.sparse.linalg import norm as sparse_norm

from .errors import FactorizationFailed, IllConditioned, NotConverged, SingularMatrix

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED
# Below this size eigenproblems are solved densely
DENSE_THRESHOLD = 2000
RESIDUAL_TOLERANCE = 1e-10
EIGEN_RESIDUAL_TOLERANCE = 1e-8
MAX_REFINEMENTS = 5


@dataclass
class SolveReport:
    """Result of a sparse direct solve with iterative refinement.

    Parameters
    ----------
    coefficients: np.ndarray
    residual: float
        ||b - A x|| / ||b||, zero for a zero right-hand side.
    refinements: int
        Refinement steps performed after the first solve.
    fill_in: int
        Nonzeros of the L and U factors.
    """

    coefficients: np.ndarray
    residual: float
    refinements: int = 0
    fill_in: int = 0


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    method: str = "dense"

    @property
    def k(self) -> int:
        return len(self.eigenvalues)


class _SpLuInverse(LinearOperator):
    """Action of A^{-1} through a sparse LU factorization."""

    def __init__(self, matrix: sparse.spmatrix):
        self.lu = _factorize(matrix, FactorizationFailed)
        super().__init__(dtype=np.float64, shape=matrix.shape)

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        return self.lu.solve(np.asarray(x, dtype=np.float64))


def _factorize(matrix: sparse.spmatrix, error: type):
    try:
        return splu(sparse.csc_matrix(matrix, dtype=np.float64))
    except RuntimeError as exc:
        raise error(f"Sparse LU factorization failed: {exc}") from exc


def solve_source(
    A: sparse.spmatrix,
    b: np.ndarray,
    tol: float = RESIDUAL_TOLERANCE,
    max_refinements: int = MAX_REFINEMENTS,
) -> SolveReport:
    """Solve A x = b by sparse LU with iterative refinement.

    Parameters
    ----------
    A: sparse.spmatrix
        Symmetric reduced operator.
    b: np.ndarray
    tol: float
        Target relative residual. Defaults to 1e-10.
    max_refinements: int
        Defaults to 5.

    Returns
    -------
    report: SolveReport
    """
    b = np.asarray(b, dtype=np.float64)
    n = A.shape[0]
    if n == 0:
        return SolveReport(np.zeros(0), 0.0)
    msg = f"Right-hand side has size {len(b)} but the matrix has size {n}"
    assert len(b) == n, msg

    lu = _factorize(A, SingularMatrix)
    fill_in = lu.L.nnz + lu.U.nnz
    norm_b = np.linalg.norm(b)
    if norm_b == 0:
        return SolveReport(np.zeros(n), 0.0, fill_in=fill_in)

    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("Sparse LU produced non-finite values")
    residual = np.linalg.norm(b - A @ x) / norm_b
    refinements = 0
    while residual > tol and refinements < max_refinements:
        candidate = x + lu.solve(b - A @ x)
        new_residual = np.linalg.norm(b - A @ candidate) / norm_b
        refinements += 1
        if not new_residual < 0.5 * residual:
            if new_residual < residual:
                x, residual = candidate, new_residual
            break
        x, residual = candidate, new_residual

    if residual > tol:
        msg = f"Iterative refinement stalled at relative residual {residual:.3e}"
        logger.warning(msg)
        warnings.warn(msg, IllConditioned)
    return SolveReport(x, float(residual), refinements, fill_in)


def _m_orthonormalize(vectors: np.ndarray, M: sparse.spmatrix) -> np.ndarray:
    gram = vectors.T @ (M @ vectors)
    gram = 0.5 * (gram + gram.T)
    try:
        factor = la.cholesky(gram, lower=True)
    except la.LinAlgError as exc:
        raise FactorizationFailed("Eigenvectors are not M-independent") from exc
    return la.solve_triangular(factor, vectors.T, lower=True).T


def _residuals(A, M, eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> np.ndarray:
    norm_a = sparse_norm(A, 1) if sparse.issparse(A) else np.linalg.norm(A, 1)
    R = A @ eigenvectors - (M @ eigenvectors) * eigenvalues[None, :]
    scale = norm_a * np.linalg.norm(eigenvectors, axis=0)
    return np.linalg.norm(R, axis=0) / np.where(scale > 0, scale, 1.0)


def solve_smallest_eigs(
    A: sparse.spmatrix,
    M: sparse.spmatrix,
    k: int,
    seed: int = DEFAULT_SEED,
    dense_threshold: int = DENSE_THRESHOLD,
) -> EigenResult:
    """k smallest eigenpairs of the generalized problem A u = lambda M u.

    Small systems are solved densely. Larger ones use shift-invert Lanczos
    around zero with A factorized once by sparse LU and a start vector drawn
    from a seeded generator, so repeated runs give identical results.
    Eigenvectors are returned M-orthonormal.

    Parameters
    ----------
    A: sparse.spmatrix
        Symmetric positive semi-definite operator on the reduced space.
    M: sparse.spmatrix
        Symmetric positive definite mass operator.
    k: int
        Number of eigenpairs.
    seed: int
        Seed of the Lanczos start vector. Defaults to 0x5EED.
    dense_threshold: int
        Use the dense solver below this size. Defaults to 2000.

    Returns
    -------
    result: EigenResult
    """
    n = A.shape[0]
    msg = f"Can't compute {k} eigenpairs of a system of size {n}"
    assert 0 < k <= n, msg

    if n < dense_threshold:
        try:
            values, vectors = la.eigh(
                _dense(A), _dense(M), subset_by_index=[0, k - 1]
            )
        except la.LinAlgError as exc:
            raise FactorizationFailed(f"Dense generalized eigensolver failed: {exc}") from exc
        method = "dense"
    else:
        rng = np.random.default_rng(seed)
        try:
            values, vectors = eigsh(
                A,
                k=k,
                M=M,
                sigma=0.0,
                which="LM",
                OPinv=_SpLuInverse(A),
                v0=rng.standard_normal(n),
            )
        except ArpackNoConvergence as exc:
            logger.warning(
                f"Lanczos converged {len(exc.eigenvalues)} out of {k} eigenpairs"
            )
            raise NotConverged(
                f"Shift-invert Lanczos converged only {len(exc.eigenvalues)} of {k} eigenpairs",
                exc.eigenvalues,
                exc.eigenvectors,
            ) from exc
        method = "shift-invert"

    order = np.argsort(values)
    values, vectors = np.asarray(values)[order], _m_orthonormalize(vectors[:, order], M)
    residuals = _residuals(A, M, values, vectors)
    if np.any(residuals > EIGEN_RESIDUAL_TOLERANCE):
        logger.warning(
            f"Eigenpair residuals up to {residuals.max():.3e} exceed {EIGEN_RESIDUAL_TOLERANCE:.0e}"
        )
    return EigenResult(values, vectors, residuals, method)


def _dense(matrix) -> np.ndarray:
    return matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix, dtype=float)


def condition_estimate(
    A: sparse.spmatrix,
    seed: int = DEFAULT_SEED,
    dense_threshold: int = DENSE_THRESHOLD,
) -> float:
    """2-norm condition number max |lambda| / min |lambda| of a symmetric matrix.

    The extreme eigenvalues come from Lanczos iterations, shift-invert
    around zero for the smallest one. Small matrices use a dense
    eigendecomposition.
    """
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n < dense_threshold:
        magnitudes = np.abs(la.eigvalsh(_dense(A)))
        smallest, largest = magnitudes.min(), magnitudes.max()
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        largest = np.abs(eigsh(A, k=1, which="LM", v0=v0, tol=1e-6, return_eigenvectors=False)).max()
        smallest = np.abs(
            eigsh(
                A,
                k=1,
                sigma=0.0,
                which="LM",
                OPinv=_SpLuInverse(A),
                v0=v0,
                tol=1e-6,
                return_eigenvectors=False,
            )
        ).min()
    if smallest == 0:
        return float("inf")
    return float(largest / smallest)
