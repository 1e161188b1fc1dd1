from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from einops import rearrange
from numpy.polynomial import Legendre
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BarycentricInterpolator

from .errors import NonConvergence

# Ghost-penalty derivatives of order p lose all precision past this degree
MAX_DEGREE = 12
MAX_NEWTON_ITERATIONS = 100

Real = Union[float, np.ndarray]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class NodeSet1D:
    """Legendre-Gauss-Lobatto nodes of a given degree.

    Parameters
    ----------
    degree: int
        Polynomial degree p >= 1.
    nodes: np.ndarray, shape (p + 1,)
        Strictly increasing nodes with nodes[0] = -1 and nodes[p] = 1.
    weights: np.ndarray, shape (p + 1,)
        Lobatto quadrature weights associated to the nodes.
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class QuadRule1D:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def mapped(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Affine map of the rule from [-1, 1] to [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


@dataclass(frozen=True)
class BasisTable:
    """Values and reference derivatives of every tensor basis function
    at a list of reference points.

    All arrays have shape (num_points, (p + 1) ** 2), where the local index
    of the basis function with LGL indices (i, j) is ``i * (p + 1) + j``.
    """

    values: np.ndarray
    ds: np.ndarray
    dt: np.ndarray

    def gradients(self, h: float) -> Tuple[np.ndarray, np.ndarray]:
        """Physical gradients on a square element of side ``h``."""
        scale = 2.0 / h
        return scale * self.ds, scale * self.dt


def legendre_eval(n: int, x: Real) -> Tuple[Real, Real]:
    """Evaluate the Legendre polynomial L_n and its derivative.

    Parameters
    ----------
    n: int
        Polynomial degree, n >= 0.
    x: float or np.ndarray
        Evaluation points in [-1, 1].

    Returns
    -------
    value, derivative: float or np.ndarray
    """
    if n < 0:
        raise ValueError(f"Legendre degree must be non-negative, but got {n}")
    polynomial = Legendre.basis(n)
    return polynomial(x), polynomial.deriv()(x)


@lru_cache(maxsize=None)
def lgl_points(p: int) -> NodeSet1D:
    """Compute the p + 1 Legendre-Gauss-Lobatto nodes.

    Interior nodes are the roots of L_p', found by Newton iteration on
    (1 - x^2) L_p'(x) starting from Chebyshev-Gauss-Lobatto points.
    """
    if p < 1:
        raise ValueError(f"LGL points need a degree p >= 1, but got {p}")

    interior = -np.cos(np.pi * np.arange(1, p) / p)
    converged = p == 1
    for _ in range(MAX_NEWTON_ITERATIONS):
        if converged:
            break
        value, derivative = legendre_eval(p, interior)
        # d/dx [(1 - x^2) L_p'] = -p (p + 1) L_p
        step = (1 - interior**2) * derivative / (p * (p + 1) * value)
        interior = interior + step
        converged = np.max(np.abs(step)) < 1e-15
    if not converged:
        raise NonConvergence(f"Newton iteration for LGL points of degree {p} failed")

    nodes = np.concatenate([[-1.0], interior, [1.0]])
    nodes = 0.5 * (nodes - nodes[::-1])
    value, _ = legendre_eval(p, nodes)
    weights = 2.0 / (p * (p + 1) * value**2)
    return NodeSet1D(p, _frozen(nodes), _frozen(0.5 * (weights + weights[::-1])))


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadRule1D:
    """n-point Gauss-Legendre rule on [-1, 1], exact up to degree 2n - 1."""
    if n < 1:
        raise ValueError(f"Gauss-Legendre rules need n >= 1 points, but got {n}")
    nodes, weights = leggauss(n)
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadRule1D(_frozen(nodes), _frozen(weights))


def differentiation_matrix(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Nodal differentiation matrix D[i, j] = l_j'(x_i) from barycentric weights."""
    n = len(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    matrix = (weights[None, :] / weights[:, None]) / diff
    np.fill_diagonal(matrix, 0.0)
    matrix[np.diag_indices(n)] = -matrix.sum(axis=1)
    return matrix


class Basis2D:
    """Tensor-product Lagrange basis on the LGL grid of the reference square.

    The 1D cardinal functions are evaluated in barycentric form.
    Derivatives of any order are obtained by applying powers of the nodal
    differentiation matrix, which is exact for polynomials of degree <= p.

    Parameters
    ----------
    degree: int
        Polynomial degree p, 1 <= p <= 12.
    """

    def __init__(self, degree: int):
        if not 1 <= degree <= MAX_DEGREE:
            raise ValueError(
                f"Polynomial degree must be in [1, {MAX_DEGREE}], but got {degree}"
            )
        self.degree = degree
        self.lgl = lgl_points(degree)
        self._interpolator = BarycentricInterpolator(
            self.lgl.nodes, np.eye(degree + 1)
        )
        self.differentiation = differentiation_matrix(
            np.asarray(self.lgl.nodes), np.asarray(self._interpolator.wi)
        )
        self._powers = [np.eye(degree + 1)]
        for _ in range(degree):
            self._powers.append(self._powers[-1] @ self.differentiation)

    @property
    def nodes(self) -> np.ndarray:
        return self.lgl.nodes

    @property
    def num_nodes_1d(self) -> int:
        return self.degree + 1

    @property
    def num_local(self) -> int:
        return (self.degree + 1) ** 2

    def derivative_matrix(self, order: int) -> np.ndarray:
        """Matrix whose row m holds the ``order``-th derivatives of every
        cardinal function at node m."""
        if order > self.degree:
            return np.zeros((self.num_nodes_1d, self.num_nodes_1d))
        return self._powers[order]

    def eval_1d(self, x: Real, derivative: int = 0) -> np.ndarray:
        """Cardinal functions (or their derivatives) at points ``x``.

        Returns
        -------
        table: np.ndarray, shape (num_points, p + 1)
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = np.asarray(self._interpolator(x)).reshape(len(x), self.num_nodes_1d)
        if derivative == 0:
            return values
        return values @ self.derivative_matrix(derivative)

    def tensor(self, s_table: np.ndarray, t_table: np.ndarray) -> np.ndarray:
        """Combine per-point 1D tables into the flattened 2D table."""
        return rearrange(
            np.einsum("ma,mb->mab", s_table, t_table), "m a b -> m (a b)"
        )


def basis_eval_grid(basis: Basis2D, points: np.ndarray) -> BasisTable:
    """Evaluate all basis functions and their first derivatives.

    Parameters
    ----------
    basis: Basis2D
    points: np.ndarray, shape (num_points, 2)
        Reference coordinates (s, t) in [-1, 1]^2.

    Returns
    -------
    table: BasisTable
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    s, t = points[:, 0], points[:, 1]
    vs, vt = basis.eval_1d(s), basis.eval_1d(t)
    dvs, dvt = basis.eval_1d(s, 1), basis.eval_1d(t, 1)
    return BasisTable(
        values=basis.tensor(vs, vt),
        ds=basis.tensor(dvs, vt),
        dt=basis.tensor(vs, dvt),
    )
