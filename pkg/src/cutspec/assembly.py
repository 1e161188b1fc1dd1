import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy import sparse

from .basis import Basis2D, BasisTable, basis_eval_grid, gauss_legendre
from .errors import DegenerateElement, DimensionMismatch
from .geometry import CutMesh, Element, ElementClass, ElementIndex, Face, LevelSet, Side
from .quadrature import ElementRules, MeshQuadrature, SurfaceRule, VolumeRule, tensor_rule

logger = logging.getLogger(__name__)

# Scalar field evaluated at arrays of physical coordinates
Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

SIDES = (Side.POS, Side.NEG)


class DofMap:
    """Degrees of freedom of the doubled space V+ (+) V-.

    Each side owns a conforming nodal numbering on the lattice of LGL points
    of its fictitious submesh: element (i, j) maps its local node (a, b) to
    the lattice node (i p + a, j p + b), so nodes on shared edges and corners
    get the same index. Interface elements are active on both sides and own
    two full local index sets. Global indices list the positive block first.

    Parameters
    ----------
    mesh: CutMesh
        Classified mesh.
    basis: Basis2D
    """

    def __init__(self, mesh: CutMesh, basis: Basis2D):
        assert mesh.is_classified, "Degrees of freedom need a classified mesh"
        self.mesh = mesh
        self.basis = basis
        p, N = basis.degree, mesh.N
        self.lattice_size = N * p + 1

        a = np.arange(p + 1)
        self._local_lattice = (a[:, None] * self.lattice_size + a[None, :]).ravel()

        offset = 0
        self._numbering: Dict[Side, np.ndarray] = {}
        self._elements: Dict[Side, List[ElementIndex]] = {}
        coordinates, sides, boundary = [], [], []
        lattice_x = self._lattice_coordinates(mesh.domain.x0)
        lattice_y = self._lattice_coordinates(mesh.domain.y0)
        for side in SIDES:
            elements = [e.index for e in mesh.submesh(side)]
            used = np.zeros(self.lattice_size**2, dtype=bool)
            for index in elements:
                used[self._lattice_ids(index)] = True
            numbering = np.full(self.lattice_size**2, -1, dtype=int)
            count = int(used.sum())
            numbering[used] = offset + np.arange(count)
            offset += count

            nodes = np.nonzero(used)[0]
            I, J = np.divmod(nodes, self.lattice_size)
            coordinates.append(np.stack([lattice_x[I], lattice_y[J]], axis=1))
            sides.append(np.full(count, side.value, dtype=int))
            last = self.lattice_size - 1
            boundary.append((I == 0) | (I == last) | (J == 0) | (J == last))

            self._numbering[side] = numbering
            self._elements[side] = elements

        self.num_dofs = offset
        self.coordinates = np.concatenate(coordinates).reshape(-1, 2)
        self.sides = np.concatenate(sides)
        self.dirichlet_mask = np.concatenate(boundary)

    def _lattice_coordinates(self, origin: float) -> np.ndarray:
        p, h = self.basis.degree, self.mesh.h
        coordinates = np.empty(self.lattice_size)
        for i in range(self.mesh.N):
            coordinates[i * p : (i + 1) * p + 1] = origin + i * h + 0.5 * h * (1 + self.basis.nodes)
        return coordinates

    def _lattice_ids(self, index: ElementIndex) -> np.ndarray:
        i, j = index
        p = self.basis.degree
        return self._local_lattice + i * p * self.lattice_size + j * p

    def element_dofs(self, index: ElementIndex, side: Side) -> np.ndarray:
        """Global indices of the (p + 1)^2 local nodes of an element on one side."""
        dofs = self._numbering[side][self._lattice_ids(index)]
        assert np.all(dofs >= 0), f"Element {index} is not active on side {side.name}"
        return dofs

    def active_sides(self, element: Element) -> Tuple[Side, ...]:
        return tuple(side for side in SIDES if element.cls.touches(side))

    def side_slice(self, side: Side) -> slice:
        first = 0 if side is Side.POS else self.num_dofs_of(Side.POS)
        return slice(first, first + self.num_dofs_of(side))

    def num_dofs_of(self, side: Side) -> int:
        return int(np.sum(self.sides == side.value))

    def interpolate(self, fields: Dict[Side, Field]) -> np.ndarray:
        """Nodal interpolant of a piecewise field, one closure per side."""
        values = np.zeros(self.num_dofs)
        for side in SIDES:
            mask = self.sides == side.value
            if np.any(mask):
                x, y = self.coordinates[mask, 0], self.coordinates[mask, 1]
                values[mask] = np.broadcast_to(fields[side](x, y), x.shape)
        return values


@dataclass(frozen=True)
class NitscheCoefficients:
    kappa_plus: float
    kappa_minus: float
    gamma: float
    measure_plus: float
    measure_minus: float
    interface_measure: float

    def kappa(self, side: Side) -> float:
        return self.kappa_plus if side is Side.POS else self.kappa_minus


def compute_nitsche_coeffs(
    element: Element,
    rules: ElementRules,
    alpha_plus: float,
    alpha_minus: float,
    h: Optional[float] = None,
) -> NitscheCoefficients:
    """Weighted-average and penalty coefficients of an interface element.

    Parameters
    ----------
    element: Element
    rules: ElementRules
        Cut quadrature of the element, measures are weight sums.
    alpha_plus, alpha_minus: float
        Diffusion coefficients, both positive.
    h: Optional[float]
        Element size. Defaults to the element side.

    Returns
    -------
    coefficients: NitscheCoefficients
    """
    msg = f"Diffusion coefficients must be positive, but got {alpha_plus} and {alpha_minus}"
    assert alpha_plus > 0 and alpha_minus > 0, msg
    h = element.size if h is None else h
    plus, minus = rules.pos.measure, rules.neg.measure
    interface = rules.surface.measure
    if plus + minus <= 0:
        raise DegenerateElement(f"Element {element.index} has zero measure on both sides")
    denominator = alpha_minus * plus + alpha_plus * minus
    kappa_plus = alpha_minus * plus / denominator
    gamma = 2 * h * interface / (plus / alpha_plus + minus / alpha_minus)
    return NitscheCoefficients(
        kappa_plus, 1.0 - kappa_plus, gamma, plus, minus, interface
    )


class _Triplets:
    """Dense element blocks merged into a sparse matrix in insertion order."""

    def __init__(self, size: int):
        self.size = size
        self.rows, self.cols, self.values = [], [], []

    def add(self, dofs: np.ndarray, block: np.ndarray, cols: Optional[np.ndarray] = None):
        cols = dofs if cols is None else cols
        self.rows.append(np.repeat(dofs, len(cols)))
        self.cols.append(np.tile(cols, len(dofs)))
        self.values.append(np.ravel(block))

    def tocsr(self, symmetrize: bool = True) -> sparse.csr_matrix:
        if not self.values:
            return sparse.csr_matrix((self.size, self.size))
        matrix = sparse.coo_matrix(
            (np.concatenate(self.values), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.size, self.size),
        ).tocsr()
        if symmetrize:
            matrix = (0.5 * (matrix + matrix.T)).tocsr()
        matrix.sum_duplicates()
        return matrix


class ElementIntegrator:
    """Element-level integrals of the tensor basis.

    Uncut elements reuse the reference stiffness and mass matrices, which
    only scale with the element size. Cut elements evaluate the basis at
    their own quadrature points.
    """

    def __init__(self, basis: Basis2D, q: int):
        self.basis = basis
        self.q = q
        rule = tensor_rule((-1.0, 1.0, -1.0, 1.0), q)
        table = basis_eval_grid(basis, rule.points)
        w = rule.weights[:, None]
        self.reference_table = table
        self.reference_weights = rule.weights
        self.reference_stiffness = (table.ds * w).T @ table.ds + (table.dt * w).T @ table.dt
        self.reference_mass = (table.values * w).T @ table.values

    def table(self, element: Element, points: np.ndarray) -> BasisTable:
        return basis_eval_grid(self.basis, element.to_reference(points[:, 0], points[:, 1]))

    def stiffness(self, element: Element, rule: VolumeRule, full: bool = False) -> np.ndarray:
        if full:
            return self.reference_stiffness
        gx, gy = self.table(element, rule.points).gradients(element.size)
        w = rule.weights[:, None]
        return (gx * w).T @ gx + (gy * w).T @ gy

    def mass(self, element: Element, rule: VolumeRule, full: bool = False) -> np.ndarray:
        if full:
            return (0.5 * element.size) ** 2 * self.reference_mass
        values = self.table(element, rule.points).values
        return (values * rule.weights[:, None]).T @ values

    def load(self, element: Element, rule: VolumeRule, source: Field) -> np.ndarray:
        values = self.table(element, rule.points).values
        f = np.broadcast_to(source(rule.points[:, 0], rule.points[:, 1]), rule.weights.shape)
        return values.T @ (rule.weights * f)


def _resolve_quadrature(
    mesh: CutMesh,
    basis: Basis2D,
    levelset: Optional[LevelSet],
    quadrature: Optional[MeshQuadrature],
) -> MeshQuadrature:
    if quadrature is not None:
        return quadrature
    levelset = mesh.levelset if levelset is None else levelset
    assert levelset is not None, "A level set is required to build quadrature rules"
    return MeshQuadrature(mesh, levelset, basis.degree + 3)


def _interface_tables(
    integrator: ElementIntegrator, element: Element, surface: SurfaceRule
) -> Tuple[np.ndarray, np.ndarray]:
    """Basis values and normal derivatives at the interface points."""
    table = integrator.table(element, surface.points)
    gx, gy = table.gradients(element.size)
    normal_derivative = gx * surface.normals[:, :1] + gy * surface.normals[:, 1:]
    return table.values, normal_derivative


def interface_block(
    values: np.ndarray,
    normal_derivative: np.ndarray,
    weights: np.ndarray,
    coefficients: NitscheCoefficients,
    alpha_plus: float,
    alpha_minus: float,
    penalty: float,
) -> np.ndarray:
    """Nitsche interface matrix on the stacked local dofs [V+ ; V-].

    Adds the two symmetric consistency terms <{a dn v}, [w]> + <[v], {a dn w}>
    and the penalty (p^2 / h) gamma <[v], [w]>, with [v] = v+ - v- and
    {a dn v} = k+ a+ dn v+ + k- a- dn v-.
    """
    jump = np.concatenate([values, -values], axis=1)
    average = np.concatenate(
        [
            coefficients.kappa_plus * alpha_plus * normal_derivative,
            coefficients.kappa_minus * alpha_minus * normal_derivative,
        ],
        axis=1,
    )
    w = weights[:, None]
    consistency = (jump * w).T @ average
    return consistency + consistency.T + penalty * coefficients.gamma * (jump * w).T @ jump


def nitsche_coefficients(
    quadrature: MeshQuadrature, alpha_plus: float, alpha_minus: float
) -> Dict[ElementIndex, NitscheCoefficients]:
    """Coefficients of every interface element of the mesh."""
    return {
        element.index: compute_nitsche_coeffs(
            element, quadrature.rules(element), alpha_plus, alpha_minus
        )
        for element in quadrature.mesh.elements_of(ElementClass.CUT)
    }


def assemble_stiffness(
    mesh: CutMesh,
    dofmap: DofMap,
    basis: Basis2D,
    levelset: Optional[LevelSet] = None,
    alpha_plus: float = 1.0,
    alpha_minus: float = 1.0,
    quadrature: Optional[MeshQuadrature] = None,
) -> sparse.csr_matrix:
    """Symmetric Nitsche stiffness matrix on the doubled space.

    Parameters
    ----------
    mesh: CutMesh
        Classified mesh.
    dofmap: DofMap
    basis: Basis2D
    levelset: Optional[LevelSet]
        Defaults to the level set the mesh was classified with.
    alpha_plus, alpha_minus: float
        Piecewise constant diffusion coefficients.
    quadrature: Optional[MeshQuadrature]
        Precomputed rules. Built with q = p + 3 if not given.

    Returns
    -------
    stiffness: sparse.csr_matrix, shape (num_dofs, num_dofs)
    """
    quadrature = _resolve_quadrature(mesh, basis, levelset, quadrature)
    integrator = ElementIntegrator(basis, quadrature.q)
    alpha = {Side.POS: alpha_plus, Side.NEG: alpha_minus}
    penalty = basis.degree**2 / mesh.h
    triplets = _Triplets(dofmap.num_dofs)

    for element in mesh.elements():
        if element.cls is not ElementClass.CUT:
            side = Side(element.cls.value)
            block = alpha[side] * integrator.reference_stiffness
            triplets.add(dofmap.element_dofs(element.index, side), block)
            continue

        rules = quadrature.rules(element)
        for side in SIDES:
            rule = rules.volume(side)
            if rule.size:
                block = alpha[side] * integrator.stiffness(element, rule)
                triplets.add(dofmap.element_dofs(element.index, side), block)

        if rules.surface.size:
            coefficients = compute_nitsche_coeffs(element, rules, alpha_plus, alpha_minus)
            values, dn = _interface_tables(integrator, element, rules.surface)
            block = interface_block(
                values, dn, rules.surface.weights, coefficients, alpha_plus, alpha_minus, penalty
            )
            dofs = np.concatenate(
                [dofmap.element_dofs(element.index, Side.POS), dofmap.element_dofs(element.index, Side.NEG)]
            )
            triplets.add(dofs, block)

    return triplets.tocsr()


def assemble_mass(
    mesh: CutMesh,
    dofmap: DofMap,
    basis: Basis2D,
    levelset: Optional[LevelSet] = None,
    quadrature: Optional[MeshQuadrature] = None,
) -> sparse.csr_matrix:
    """Block mass matrix (u+, v+)_{Omega+} + (u-, v-)_{Omega-}."""
    quadrature = _resolve_quadrature(mesh, basis, levelset, quadrature)
    integrator = ElementIntegrator(basis, quadrature.q)
    triplets = _Triplets(dofmap.num_dofs)
    for element in mesh.elements():
        if element.cls is not ElementClass.CUT:
            side = Side(element.cls.value)
            triplets.add(
                dofmap.element_dofs(element.index, side), integrator.mass(element, None, full=True)
            )
            continue
        rules = quadrature.rules(element)
        for side in SIDES:
            rule = rules.volume(side)
            if rule.size:
                triplets.add(dofmap.element_dofs(element.index, side), integrator.mass(element, rule))
    return triplets.tocsr()


def face_penalty_block(basis: Basis2D, face: Face, h: float) -> np.ndarray:
    """Ghost-penalty matrix of one face on the stacked dofs [left ; right].

    Sums (h^(2j+1) / p^(2j)) ([dn^j v], [dn^j w])_face over j = 0..p, where
    [.] is the value on the right element minus the value on the left one.
    The face normal is axis-aligned, so dn^j only differentiates the 1D
    factor across the face.
    """
    p = basis.degree
    gauss = gauss_legendre(p + 1)
    weights = 0.5 * face.length * gauss.weights
    along = basis.eval_1d(gauss.nodes)
    num_points, n1 = along.shape

    block = np.zeros((2 * basis.num_local, 2 * basis.num_local))
    for j in range(p + 1):
        derivative = (2.0 / h) ** j * basis.derivative_matrix(j)
        # Left element sees the face at s = +1, the right one at s = -1
        left = np.broadcast_to(derivative[p], (num_points, n1))
        right = np.broadcast_to(derivative[0], (num_points, n1))
        if face.axis == 0:
            left, right = basis.tensor(left, along), basis.tensor(right, along)
        else:
            left, right = basis.tensor(along, left), basis.tensor(along, right)
        jump = np.concatenate([-left, right], axis=1)
        scale = h ** (2 * j + 1) / p ** (2 * j)
        block += scale * (jump * weights[:, None]).T @ jump
    return block


def assemble_ghost_penalty(
    mesh: CutMesh,
    dofmap: DofMap,
    basis: Basis2D,
    sides: Tuple[Side, ...] = SIDES,
) -> sparse.csr_matrix:
    """Ghost penalty g(v, w) over the faces of G- (acting on V-) and G+ (on V+)."""
    blocks: Dict[int, np.ndarray] = {}
    triplets = _Triplets(dofmap.num_dofs)
    for side in sides:
        for face in mesh.ghost_faces(side):
            if face.axis not in blocks:
                blocks[face.axis] = face_penalty_block(basis, face, mesh.h)
            dofs = np.concatenate(
                [dofmap.element_dofs(face.left, side), dofmap.element_dofs(face.right, side)]
            )
            triplets.add(dofs, blocks[face.axis])
    return triplets.tocsr()


@dataclass(frozen=True)
class JumpData:
    """Interface data g_D = [u] and g_N = [a dn u] for nonhomogeneous jumps."""

    dirichlet: Field
    neumann: Field


def assemble_load(
    mesh: CutMesh,
    dofmap: DofMap,
    basis: Basis2D,
    levelset: Optional[LevelSet],
    f_plus: Field,
    f_minus: Field,
    jump: Optional[JumpData] = None,
    alpha_plus: float = 1.0,
    alpha_minus: float = 1.0,
    quadrature: Optional[MeshQuadrature] = None,
) -> np.ndarray:
    """Right-hand side (f+, v+) + (f-, v-) plus the interface data terms.

    With jump data the consistent Nitsche terms
    <g_D, {a dn v}> + (p^2 / h) <gamma g_D, [v]> - <g_N, k- v+ + k+ v->
    are added, the normal pointing from Omega- to Omega+.

    Returns
    -------
    load: np.ndarray, shape (num_dofs,)
    """
    quadrature = _resolve_quadrature(mesh, basis, levelset, quadrature)
    integrator = ElementIntegrator(basis, quadrature.q)
    sources = {Side.POS: f_plus, Side.NEG: f_minus}
    penalty = basis.degree**2 / mesh.h
    load = np.zeros(dofmap.num_dofs)

    for element in mesh.elements():
        rules = quadrature.rules(element)
        for side in dofmap.active_sides(element):
            rule = rules.volume(side)
            if rule.size:
                np.add.at(
                    load,
                    dofmap.element_dofs(element.index, side),
                    integrator.load(element, rule, sources[side]),
                )

        if jump is None or element.cls is not ElementClass.CUT or not rules.surface.size:
            continue
        surface = rules.surface
        coefficients = compute_nitsche_coeffs(element, rules, alpha_plus, alpha_minus)
        values, dn = _interface_tables(integrator, element, surface)
        x, y = surface.points[:, 0], surface.points[:, 1]
        g_d = surface.weights * np.broadcast_to(jump.dirichlet(x, y), surface.weights.shape)
        g_n = surface.weights * np.broadcast_to(jump.neumann(x, y), surface.weights.shape)
        jump_term = penalty * coefficients.gamma * values.T @ g_d
        plus = (
            coefficients.kappa_plus * alpha_plus * dn.T @ g_d
            + jump_term
            - coefficients.kappa_minus * values.T @ g_n
        )
        minus = (
            coefficients.kappa_minus * alpha_minus * dn.T @ g_d
            - jump_term
            - coefficients.kappa_plus * values.T @ g_n
        )
        np.add.at(load, dofmap.element_dofs(element.index, Side.POS), plus)
        np.add.at(load, dofmap.element_dofs(element.index, Side.NEG), minus)

    return load


def build_extended_forms(
    stiffness: sparse.spmatrix,
    ghost: sparse.spmatrix,
    mass: sparse.spmatrix,
    gamma_A: float,
    gamma_M: float,
    h: float,
) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Stabilized operators A = a + (gamma_A / h^2) g and M = m + gamma_M g."""
    if not stiffness.shape == ghost.shape == mass.shape:
        raise DimensionMismatch(
            f"Operators have different shapes: stiffness {stiffness.shape}, "
            f"ghost {ghost.shape}, mass {mass.shape}"
        )
    A = sparse.csr_matrix(stiffness + (gamma_A / h**2) * ghost)
    M = sparse.csr_matrix(mass + gamma_M * ghost)
    return A, M


def symmetry_error(matrix: sparse.spmatrix) -> float:
    """max |A_ij - A_ji| relative to max |A_ij|."""
    scale = abs(matrix).max()
    if scale == 0:
        return 0.0
    return float(abs(matrix - matrix.T).max() / scale)


def free_dofs(dofmap: DofMap, *matrices: sparse.spmatrix) -> np.ndarray:
    """Indices kept after removing Dirichlet nodes and void dofs.

    A dof is void when its row vanishes in one of the given matrices. This
    happens without stabilization when an interface element has a zero
    measure part on one side.
    """
    keep = ~dofmap.dirichlet_mask
    for matrix in matrices:
        keep &= np.asarray(abs(matrix).sum(axis=1)).ravel() > 0
    void = int(np.sum(~dofmap.dirichlet_mask) - np.sum(keep))
    if void:
        logger.debug(f"Removed {void} void degrees of freedom")
    return np.nonzero(keep)[0]


@dataclass
class ReducedSystem:
    """Linear system restricted to the free degrees of freedom."""

    matrix: sparse.csr_matrix
    vector: Optional[np.ndarray]
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    size: int

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        """Full coefficient vector(s) from reduced ones, fixed dofs restored."""
        reduced = np.asarray(reduced)
        full = np.zeros((self.size,) + reduced.shape[1:])
        full[self.fixed] = self.fixed_values.reshape((-1,) + (1,) * (reduced.ndim - 1))
        full[self.free] = reduced
        return full


def apply_dirichlet(
    matrix: sparse.spmatrix,
    vector: Optional[np.ndarray],
    dofmap: DofMap,
    boundary_values: Optional[np.ndarray] = None,
    free: Optional[np.ndarray] = None,
) -> ReducedSystem:
    """Strong Dirichlet conditions at the boundary LGL nodes.

    Rows and columns of fixed dofs are eliminated, which keeps the reduced
    matrix symmetric. Nonzero boundary values are lifted into the
    right-hand side as b_I - A_IB g_B.

    Parameters
    ----------
    matrix: sparse.spmatrix
    vector: Optional[np.ndarray]
        Full right-hand side, None for operators only.
    dofmap: DofMap
    boundary_values: Optional[np.ndarray], shape (num_dofs,)
        Full nodal vector whose Dirichlet entries are imposed.
        Defaults to homogeneous data.
    free: Optional[np.ndarray]
        Dofs to keep. Defaults to ``free_dofs(dofmap, matrix)``.

    Returns
    -------
    system: ReducedSystem
    """
    size = matrix.shape[0]
    if size != dofmap.num_dofs:
        raise DimensionMismatch(f"Matrix has size {size} but there are {dofmap.num_dofs} dofs")
    free = free_dofs(dofmap, matrix) if free is None else np.asarray(free)
    mask = np.ones(size, dtype=bool)
    mask[free] = False
    fixed = np.nonzero(mask)[0]

    fixed_values = np.zeros(len(fixed))
    if boundary_values is not None:
        boundary_values = np.asarray(boundary_values, dtype=float)
        fixed_values = np.where(dofmap.dirichlet_mask[fixed], boundary_values[fixed], 0.0)

    csr = sparse.csr_matrix(matrix)
    reduced = csr[free][:, free].tocsr()
    reduced_vector = None
    if vector is not None:
        reduced_vector = np.asarray(vector, dtype=float)[free]
        if np.any(fixed_values):
            reduced_vector = reduced_vector - csr[free][:, fixed] @ fixed_values
    return ReducedSystem(reduced, reduced_vector, free, fixed, fixed_values, size)


@dataclass
class Operators:
    """Assembled bilinear forms of one discretization."""

    dofmap: DofMap
    quadrature: MeshQuadrature
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    ghost: sparse.csr_matrix

    def extended(self, gamma_A: float, gamma_M: float) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
        return build_extended_forms(
            self.stiffness, self.ghost, self.mass, gamma_A, gamma_M, self.quadrature.mesh.h
        )


def assemble_operators(
    mesh: CutMesh,
    basis: Basis2D,
    alpha_plus: float,
    alpha_minus: float,
    q: Optional[int] = None,
) -> Operators:
    """Stiffness, mass and ghost penalty of a classified mesh."""
    assert mesh.levelset is not None, "Mesh must be classified against a level set"
    quadrature = MeshQuadrature(mesh, mesh.levelset, basis.degree + 3 if q is None else q)
    dofmap = DofMap(mesh, basis)
    return Operators(
        dofmap=dofmap,
        quadrature=quadrature,
        stiffness=assemble_stiffness(
            mesh, dofmap, basis, alpha_plus=alpha_plus, alpha_minus=alpha_minus, quadrature=quadrature
        ),
        mass=assemble_mass(mesh, dofmap, basis, quadrature=quadrature),
        ghost=assemble_ghost_penalty(mesh, dofmap, basis),
    )
