from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .assembly import SIDES, DofMap, Field, JumpData, compute_nitsche_coeffs
from .basis import basis_eval_grid
from .errors import LengthMismatch
from .geometry import CutMesh, Element, ElementClass, LevelSet, Side
from .quadrature import MeshQuadrature

Gradient = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


class DiscreteFunction:
    """Piecewise polynomial u_h = (u+, u-) given by its nodal coefficients.

    Parameters
    ----------
    dofmap: DofMap
    coefficients: np.ndarray, shape (num_dofs,)
    """

    def __init__(self, dofmap: DofMap, coefficients: np.ndarray):
        coefficients = np.asarray(coefficients, dtype=float)
        msg = f"Expected {dofmap.num_dofs} coefficients but got {coefficients.shape}"
        assert coefficients.shape == (dofmap.num_dofs,), msg
        self.dofmap = dofmap
        self.basis = dofmap.basis
        self.coefficients = coefficients

    def evaluate(
        self, element: Element, side: Side, points: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Value and gradient of u_side at physical points of one element."""
        local = self.coefficients[self.dofmap.element_dofs(element.index, side)]
        table = basis_eval_grid(self.basis, element.to_reference(points[:, 0], points[:, 1]))
        gx, gy = table.gradients(element.size)
        return table.values @ local, gx @ local, gy @ local

    def __call__(self, x: np.ndarray, y: np.ndarray, side: Side) -> np.ndarray:
        x, y = np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
        mesh = self.dofmap.mesh
        I, J = mesh.locate(x, y)
        values = np.empty(len(x))
        for i, j in set(zip(I.tolist(), J.tolist())):
            mask = (I == i) & (J == j)
            points = np.stack([x[mask], y[mask]], axis=1)
            values[mask] = self.evaluate(mesh.element((i, j)), side, points)[0]
        return values

    def scaled(self, factor: float) -> "DiscreteFunction":
        return DiscreteFunction(self.dofmap, factor * self.coefficients)


@dataclass
class ExactSolution:
    """Reference solution, one value and gradient closure per side."""

    value: Dict[Side, Field]
    gradient: Dict[Side, Gradient]
    jump: Optional[JumpData] = None

    @staticmethod
    def smooth(value: Field, gradient: Gradient) -> "ExactSolution":
        """The same closures on both sides."""
        return ExactSolution({s: value for s in SIDES}, {s: gradient for s in SIDES})


def _error_quadrature(
    mesh: CutMesh, levelset: LevelSet, degree: int, q: Optional[int]
) -> MeshQuadrature:
    # Two points more than the assembly default
    q = degree + 5 if q is None else q
    msg = f"Error quadrature needs q >= p + 3, but got q={q} for p={degree}"
    assert q >= degree + 3, msg
    return MeshQuadrature(mesh, levelset, q)


def _broken_error(
    uh: DiscreteFunction,
    exact: ExactSolution,
    mesh: CutMesh,
    levelset: LevelSet,
    q: Optional[int],
    gradient: bool,
) -> float:
    quadrature = _error_quadrature(mesh, levelset, uh.basis.degree, q)
    total = 0.0
    for element in mesh.elements():
        rules = quadrature.rules(element)
        for side in uh.dofmap.active_sides(element):
            rule = rules.volume(side)
            if not rule.size:
                continue
            x, y = rule.points[:, 0], rule.points[:, 1]
            value, gx, gy = uh.evaluate(element, side, rule.points)
            if gradient:
                ex, ey = exact.gradient[side](x, y)
                squared = (gx - ex) ** 2 + (gy - ey) ** 2
            else:
                squared = (value - exact.value[side](x, y)) ** 2
            total += rule.integrate(squared)
    return float(np.sqrt(total))


def broken_l2_error(
    uh: DiscreteFunction,
    exact: ExactSolution,
    mesh: CutMesh,
    levelset: LevelSet,
    q: Optional[int] = None,
) -> float:
    """Broken L2 error over Omega+ and Omega-.

    Parameters
    ----------
    uh: DiscreteFunction
    exact: ExactSolution
    mesh: CutMesh
        Classified mesh.
    levelset: LevelSet
    q: Optional[int]
        Gauss points per direction, at least p + 3. Defaults to p + 5.

    Returns
    -------
    error: float
    """
    return _broken_error(uh, exact, mesh, levelset, q, gradient=False)


def broken_h1_error(
    uh: DiscreteFunction,
    exact: ExactSolution,
    mesh: CutMesh,
    levelset: LevelSet,
    q: Optional[int] = None,
) -> float:
    """Broken H1 seminorm of the error, same quadrature as ``broken_l2_error``."""
    return _broken_error(uh, exact, mesh, levelset, q, gradient=True)


def energy_norm(
    uh: DiscreteFunction,
    mesh: CutMesh,
    levelset: LevelSet,
    alpha_plus: float,
    alpha_minus: float,
    ghost: Optional[sparse.spmatrix] = None,
    q: Optional[int] = None,
) -> float:
    """Discrete energy norm augmented with the ghost penalty.

    ||grad v||^2 + (h / p^2) sum ||{a dn v}||^2_G + (p^2 / h) sum ||[v]||^2_G
    + (1 / h^2) g(v, v), square-rooted. Interface sums run over the
    interface segments of the cut elements.
    """
    p, h = uh.basis.degree, mesh.h
    quadrature = _error_quadrature(mesh, levelset, p, q)
    alpha = {Side.POS: alpha_plus, Side.NEG: alpha_minus}
    gradient_term, flux_term, jump_term = 0.0, 0.0, 0.0

    for element in mesh.elements():
        rules = quadrature.rules(element)
        for side in uh.dofmap.active_sides(element):
            rule = rules.volume(side)
            if rule.size:
                _, gx, gy = uh.evaluate(element, side, rule.points)
                gradient_term += rule.integrate(gx**2 + gy**2)

        surface = rules.surface
        if element.cls is not ElementClass.CUT or not surface.size:
            continue
        coefficients = compute_nitsche_coeffs(element, rules, alpha_plus, alpha_minus)
        traces, fluxes = {}, {}
        for side in SIDES:
            value, gx, gy = uh.evaluate(element, side, surface.points)
            traces[side] = value
            dn = gx * surface.normals[:, 0] + gy * surface.normals[:, 1]
            fluxes[side] = coefficients.kappa(side) * alpha[side] * dn
        average = fluxes[Side.POS] + fluxes[Side.NEG]
        jump = traces[Side.POS] - traces[Side.NEG]
        flux_term += float(np.dot(surface.weights, average**2))
        jump_term += float(np.dot(surface.weights, jump**2))

    total = gradient_term + (h / p**2) * flux_term + (p**2 / h) * jump_term
    if ghost is not None:
        total += float(uh.coefficients @ (ghost @ uh.coefficients)) / h**2
    return float(np.sqrt(max(total, 0.0)))


def eigenvalue_errors(computed: Sequence[float], reference: Sequence[float]) -> np.ndarray:
    """Relative errors |lambda_i - lambda_i^ref| / lambda_i^ref matched by sorted index."""
    if len(computed) != len(reference):
        raise LengthMismatch(
            f"Got {len(computed)} computed eigenvalues but {len(reference)} reference ones"
        )
    computed = np.sort(np.asarray(computed, dtype=float))
    reference = np.sort(np.asarray(reference, dtype=float))
    return np.abs(computed - reference) / np.abs(reference)
