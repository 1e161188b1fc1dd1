from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import ridder

from .errors import InvalidDomain

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
GradientField = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
ElementIndex = Tuple[int, int]

# Samples per element edge when looking for interface crossings
EDGE_SAMPLES = 64
# |phi| below this (relative to h) counts as zero
ZERO_TOLERANCE = 1e-12


class Side(Enum):
    NEG = -1
    POS = 1


class ElementClass(Enum):
    NEG = -1
    CUT = 0
    POS = 1

    def touches(self, side: Side) -> bool:
        """Whether an element of this class belongs to the fictitious submesh of ``side``."""
        return self is ElementClass.CUT or self.value == side.value


# Level-set descriptors


@dataclass(frozen=True)
class Circle:
    center: Tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Flower:
    center: Tuple[float, float]
    r0: float
    amplitude: float
    lobes: int


@dataclass(frozen=True)
class HalfPlane:
    normal: Tuple[float, float]
    offset: float


@dataclass(frozen=True)
class Custom:
    name: str = "custom"


Descriptor = Union[Circle, Flower, HalfPlane, Custom]


def _polar(x: np.ndarray, y: np.ndarray, center: Tuple[float, float]):
    dx = np.asarray(x, dtype=float) - center[0]
    dy = np.asarray(y, dtype=float) - center[1]
    rho = np.hypot(dx, dy)
    # The gradient is singular at the center, which is never on the interface
    safe_rho = np.where(rho > 0, rho, 1.0)
    return dx, dy, rho, safe_rho


@dataclass(frozen=True)
class LevelSet:
    """Scalar field phi splitting the domain into {phi < 0} and {phi > 0}.

    ``value`` and ``gradient`` accept numpy arrays of x and y coordinates.
    """

    value: ScalarField
    gradient: GradientField
    descriptor: Descriptor = field(default_factory=Custom)

    def __call__(self, x, y) -> np.ndarray:
        return self.value(x, y)

    @staticmethod
    def circle(center: Tuple[float, float], radius: float) -> "LevelSet":
        def value(x, y):
            _, _, rho, _ = _polar(x, y, center)
            return rho - radius

        def gradient(x, y):
            dx, dy, _, safe_rho = _polar(x, y, center)
            return dx / safe_rho, dy / safe_rho

        return LevelSet(value, gradient, Circle(tuple(center), radius))

    @staticmethod
    def flower(
        center: Tuple[float, float], r0: float, amplitude: float, lobes: int
    ) -> "LevelSet":
        """Interface r = r0 + amplitude * sin(lobes * theta) around ``center``."""

        def value(x, y):
            dx, dy, rho, _ = _polar(x, y, center)
            return rho - r0 - amplitude * np.sin(lobes * np.arctan2(dy, dx))

        def gradient(x, y):
            dx, dy, _, safe_rho = _polar(x, y, center)
            wave = amplitude * lobes * np.cos(lobes * np.arctan2(dy, dx))
            gx = dx / safe_rho + wave * dy / safe_rho**2
            gy = dy / safe_rho - wave * dx / safe_rho**2
            return gx, gy

        return LevelSet(value, gradient, Flower(tuple(center), r0, amplitude, lobes))

    @staticmethod
    def half_plane(normal: Tuple[float, float], offset: float) -> "LevelSet":
        nx, ny = normal

        def value(x, y):
            return nx * np.asarray(x, dtype=float) + ny * np.asarray(y, dtype=float) - offset

        def gradient(x, y):
            shape = np.shape(np.asarray(x) + np.asarray(y))
            return np.full(shape, float(nx)), np.full(shape, float(ny))

        return LevelSet(value, gradient, HalfPlane(tuple(normal), offset))

    @staticmethod
    def constant(level: float) -> "LevelSet":
        """Level set without zero set: the whole domain lies on one side."""

        def value(x, y):
            return np.full(np.shape(np.asarray(x) + np.asarray(y)), float(level))

        def gradient(x, y):
            shape = np.shape(np.asarray(x) + np.asarray(y))
            return np.zeros(shape), np.zeros(shape)

        return LevelSet(value, gradient, Custom(f"constant({level})"))

    def translated(self, shift: Tuple[float, float]) -> "LevelSet":
        sx, sy = shift
        value, gradient = self.value, self.gradient
        descriptor = self.descriptor
        if isinstance(descriptor, (Circle, Flower)):
            center = (descriptor.center[0] + sx, descriptor.center[1] + sy)
            descriptor = replace(descriptor, center=center)
        return LevelSet(
            lambda x, y: value(np.asarray(x) - sx, np.asarray(y) - sy),
            lambda x, y: gradient(np.asarray(x) - sx, np.asarray(y) - sy),
            descriptor,
        )


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InvalidDomain(
                f"Domain [{self.x0}, {self.x1}] x [{self.y0}, {self.y1}] is empty"
            )

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class Element:
    index: ElementIndex
    bounds: Tuple[float, float, float, float]
    cls: Optional[ElementClass] = None

    @property
    def size(self) -> float:
        return self.bounds[1] - self.bounds[0]

    @property
    def area(self) -> float:
        return self.size**2

    @property
    def center(self) -> Tuple[float, float]:
        xm, xM, ym, yM = self.bounds
        return 0.5 * (xm + xM), 0.5 * (ym + yM)

    def to_reference(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Map physical points to reference coordinates in [-1, 1]^2."""
        xc, yc = self.center
        h = self.size
        return np.stack([2 * (np.asarray(x) - xc) / h, 2 * (np.asarray(y) - yc) / h], axis=-1)

    def boundary_samples(self, samples: int = EDGE_SAMPLES) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Counter-clockwise walk around the element boundary.

        Returns the x and y coordinates of ``4 * samples`` points (each edge
        contributes its start corner and excludes its end corner) and the
        edge each point lies on (0: bottom, 1: right, 2: top, 3: left).
        """
        xm, xM, ym, yM = self.bounds
        u = np.arange(samples) / samples
        xs = np.concatenate([xm + u * (xM - xm), np.full(samples, xM), xM - u * (xM - xm), np.full(samples, xm)])
        ys = np.concatenate([np.full(samples, ym), ym + u * (yM - ym), np.full(samples, yM), yM - u * (yM - ym)])
        edges = np.repeat(np.arange(4), samples)
        return xs, ys, edges


@dataclass(frozen=True)
class Face:
    """Interior face shared by two elements.

    The unit normal is axis-aligned and points from ``left`` to ``right``
    (for horizontal faces, from the bottom element to the top one).
    """

    left: ElementIndex
    right: ElementIndex
    start: Tuple[float, float]
    end: Tuple[float, float]
    normal: Tuple[float, float]

    @property
    def length(self) -> float:
        return float(np.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))

    @property
    def axis(self) -> int:
        """0 if the normal points along x, 1 if it points along y."""
        return 0 if self.normal[0] != 0 else 1

    @property
    def key(self) -> Tuple[ElementIndex, ElementIndex]:
        return self.left, self.right


class CutMesh:
    """Uniform partition of a square domain into N x N square elements.

    Element (i, j) covers [x0 + i h, x0 + (i + 1) h] x [y0 + j h, y0 + (j + 1) h].
    A mesh returned by ``build_mesh`` carries no classification yet.

    Parameters
    ----------
    domain: Rectangle
    N: int
        Elements per side.
    classes: Optional[np.ndarray], shape (N, N)
        Element classes indexed by (i, j). None for an unclassified skeleton.
    levelset: Optional[LevelSet]
        Level set used for the classification, if any.
    """

    def __init__(
        self,
        domain: Rectangle,
        N: int,
        classes: Optional[np.ndarray] = None,
        levelset: Optional[LevelSet] = None,
    ):
        self.domain = domain
        self.N = N
        self.h = (domain.x1 - domain.x0) / N
        self.classes = classes
        self.levelset = levelset
        self._ghost_faces: Dict[Side, List[Face]] = {}

    @property
    def is_classified(self) -> bool:
        return self.classes is not None

    @property
    def num_elements(self) -> int:
        return self.N * self.N

    def bounds(self, index: ElementIndex) -> Tuple[float, float, float, float]:
        i, j = index
        d, h = self.domain, self.h
        return d.x0 + i * h, d.x0 + (i + 1) * h, d.y0 + j * h, d.y0 + (j + 1) * h

    def element(self, index: ElementIndex) -> Element:
        cls = None if self.classes is None else ElementClass(int(self.classes[index]))
        return Element(index, self.bounds(index), cls)

    def elements(self) -> Iterator[Element]:
        """All elements in a fixed order (i major, j minor)."""
        for i in range(self.N):
            for j in range(self.N):
                yield self.element((i, j))

    def elements_of(self, cls: ElementClass) -> List[Element]:
        return [e for e in self.elements() if e.cls is cls]

    def submesh(self, side: Side) -> List[Element]:
        """Elements of the fictitious submesh T_{side,h}."""
        return [e for e in self.elements() if e.cls.touches(side)]

    def locate(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Indices of the elements containing the given points."""
        d = self.domain
        i = np.clip(np.floor((np.asarray(x) - d.x0) / self.h).astype(int), 0, self.N - 1)
        j = np.clip(np.floor((np.asarray(y) - d.y0) / self.h).astype(int), 0, self.N - 1)
        return i, j

    def with_classes(self, classes: np.ndarray, levelset: Optional[LevelSet] = None) -> "CutMesh":
        return CutMesh(self.domain, self.N, np.asarray(classes, dtype=int), levelset)

    def interior_faces(self) -> Iterator[Face]:
        """Every interior face, vertical faces first, in a fixed order."""
        d, h = self.domain, self.h
        for i in range(self.N - 1):
            for j in range(self.N):
                x = d.x0 + (i + 1) * h
                yield Face((i, j), (i + 1, j), (x, d.y0 + j * h), (x, d.y0 + (j + 1) * h), (1.0, 0.0))
        for i in range(self.N):
            for j in range(self.N - 1):
                y = d.y0 + (j + 1) * h
                yield Face((i, j), (i, j + 1), (d.x0 + i * h, y), (d.x0 + (i + 1) * h, y), (0.0, 1.0))

    def ghost_faces(self, side: Side) -> List[Face]:
        if side not in self._ghost_faces:
            self._ghost_faces[side] = ghost_faces(self, side)
        return self._ghost_faces[side]

    def counts(self) -> Dict[ElementClass, int]:
        assert self.classes is not None, "Mesh must be classified first"
        return {cls: int(np.sum(self.classes == cls.value)) for cls in ElementClass}


def build_mesh(domain: Rectangle, N: int) -> CutMesh:
    """Uniform N x N background mesh of a square domain.

    Parameters
    ----------
    domain: Rectangle
        Must be a square, elements are congruent squares of side h.
    N: int
        Elements per side, N >= 2.

    Returns
    -------
    mesh: CutMesh
        Unclassified mesh skeleton.
    """
    if N < 2:
        raise InvalidDomain(f"Need at least 2 elements per side to resolve an interface, but got N={N}")
    width, height = domain.x1 - domain.x0, domain.y1 - domain.y0
    if not np.isclose(width, height, rtol=1e-12, atol=0):
        raise InvalidDomain(
            f"Uniform square elements need a square domain, but got {width} x {height}"
        )
    return CutMesh(domain, N)


def _element_samples(element: Element, levelset: LevelSet) -> Tuple[np.ndarray, float]:
    xs, ys, _ = element.boundary_samples()
    xc, yc = element.center
    values = levelset(np.append(xs, xc), np.append(ys, yc))
    return np.asarray(values, dtype=float), float(np.asarray(levelset(xc, yc)))


def classify_element(element: Element, levelset: LevelSet) -> ElementClass:
    values, center_value = _element_samples(element, levelset)
    tolerance = ZERO_TOLERANCE * element.size
    mixed = np.any(values < -tolerance) and np.any(values > tolerance)
    if mixed or _zero_along_an_edge(element, levelset, tolerance):
        return ElementClass.CUT
    # Touching the interface at isolated points leaves the element on one side
    signed = values[np.abs(values) > tolerance]
    if signed.size:
        return ElementClass.NEG if signed[0] < 0 else ElementClass.POS
    return ElementClass.NEG if center_value <= 0 else ElementClass.POS


def _zero_along_an_edge(element: Element, levelset: LevelSet, tolerance: float) -> bool:
    xs, ys, edges = element.boundary_samples()
    vanishing = np.abs(np.asarray(levelset(xs, ys), dtype=float)) <= tolerance
    return any(np.all(vanishing[edges == k]) for k in range(4))


def classify_elements(mesh: CutMesh, levelset: LevelSet) -> CutMesh:
    """Classify every element against the level set.

    An element is cut when phi changes sign over its boundary samples and
    center, or vanishes along a whole edge (an interface lying on a shared
    edge cuts both neighbors). An element touching the interface only at a
    vertex has no part on the other side and keeps the sign of its nonzero
    samples. Elements where phi vanishes everywhere count as negative.

    Returns
    -------
    mesh: CutMesh
        A new classified mesh.
    """
    classes = np.empty((mesh.N, mesh.N), dtype=int)
    for element in mesh.elements():
        classes[element.index] = classify_element(element, levelset).value
    classified = mesh.with_classes(classes, levelset)
    counts = classified.counts()
    logger.debug(
        f"Classified {mesh.num_elements} elements: {counts[ElementClass.NEG]} negative, "
        f"{counts[ElementClass.POS]} positive, {counts[ElementClass.CUT]} cut"
    )
    return classified


def ghost_faces(mesh: CutMesh, side: Side) -> List[Face]:
    """Faces shared by an interface element and another element of T_{side,h}.

    Each face appears at most once. A face between two interface elements
    belongs to both the negative and the positive sets.
    """
    assert mesh.is_classified, "Mesh must be classified before building ghost faces"
    faces = []
    for face in mesh.interior_faces():
        left = ElementClass(int(mesh.classes[face.left]))
        right = ElementClass(int(mesh.classes[face.right]))
        has_cut = left is ElementClass.CUT or right is ElementClass.CUT
        if has_cut and left.touches(side) and right.touches(side):
            faces.append(face)
    return faces


@dataclass
class AssumptionReport:
    """Result of checking that the interface crosses the boundary of every
    interface element exactly twice, and each edge at most once.

    Attributes
    ----------
    ok: bool
    violations: List[ElementIndex]
        Interface elements breaking the assumption.
    crossings: Dict[ElementIndex, List[Tuple[float, float]]]
        Polished crossing points per interface element.
    """

    ok: bool
    violations: List[ElementIndex]
    crossings: Dict[ElementIndex, List[Tuple[float, float]]] = field(default_factory=dict)


def _polish_crossing(levelset: LevelSet, p0, p1, tolerance: float) -> Tuple[float, float]:
    (xa, ya), (xb, yb) = p0, p1

    def along(u: float) -> float:
        return float(levelset(xa + u * (xb - xa), ya + u * (yb - ya)))

    fa, fb = along(0.0), along(1.0)
    if fa == 0:
        return xa, ya
    if fb == 0 or fa * fb > 0:
        return xb, yb
    u = ridder(along, 0.0, 1.0, xtol=tolerance)
    return xa + u * (xb - xa), ya + u * (yb - ya)


def boundary_crossings(element: Element, levelset: LevelSet) -> Tuple[np.ndarray, List[Tuple[float, float]]]:
    """Count interface crossings along each edge of an element.

    Walks the boundary counter-clockwise and counts sign changes between
    consecutive samples (phi <= 0 counted as negative). A change is charged
    to the edge of the sample where it starts.

    Returns
    -------
    per_edge: np.ndarray, shape (4,)
        Crossings on the bottom, right, top and left edges.
    points: List[Tuple[float, float]]
        Crossing locations, polished by Ridder's method.
    """
    xs, ys, edges = element.boundary_samples()
    signs = np.where(np.asarray(levelset(xs, ys)) <= 0, -1, 1)
    changes = np.nonzero(signs != np.roll(signs, -1))[0]
    per_edge = np.bincount(edges[changes], minlength=4)
    points = []
    for k in changes:
        k_next = (k + 1) % len(xs)
        points.append(
            _polish_crossing(levelset, (xs[k], ys[k]), (xs[k_next], ys[k_next]), 1e-14)
        )
    return per_edge, points


def check_interface_assumption(mesh: CutMesh, levelset: LevelSet) -> AssumptionReport:
    """Verify that every interface element is crossed exactly twice on its
    boundary and at most once per edge.

    Elements that are cut only because the interface runs along one of
    their edges carry no crossing and are accepted. This is a report, not an
    exception: callers decide whether to refuse violations.
    """
    assert mesh.is_classified, "Mesh must be classified before checking the assumption"
    violations, crossings = [], {}
    for element in mesh.elements_of(ElementClass.CUT):
        per_edge, points = boundary_crossings(element, levelset)
        crossings[element.index] = points
        total = int(per_edge.sum())
        if total == 0:
            values, _ = _element_samples(element, levelset)
            tolerance = ZERO_TOLERANCE * element.size
            if np.any(values < -tolerance) and np.any(values > tolerance):
                violations.append(element.index)
            continue
        if total != 2 or np.any(per_edge > 1):
            violations.append(element.index)
    if violations:
        logger.warning(f"Interface assumption fails on {len(violations)} interface elements")
    return AssumptionReport(not violations, violations, crossings)


def refinement_consistent(coarse: CutMesh, fine: CutMesh) -> bool:
    """Whether every uncut element of ``coarse`` contains only elements of
    the same class or interface elements in ``fine`` (fine.N = 2 coarse.N)."""
    assert fine.N == 2 * coarse.N, "Fine mesh must halve the coarse mesh size"
    for element in coarse.elements():
        if element.cls is ElementClass.CUT:
            continue
        i, j = element.index
        children = fine.classes[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
        allowed = (children == element.cls.value) | (children == ElementClass.CUT.value)
        if not np.all(allowed):
            return False
    return True


def sample_levelset_gradient_error(
    levelset: LevelSet, points: Sequence[Tuple[float, float]], step: float = 1e-6
) -> float:
    """Largest relative difference between the analytic gradient and
    central differences of phi at the given points."""
    worst = 0.0
    for x, y in points:
        gx, gy = levelset.gradient(np.array(x), np.array(y))
        fx = (levelset(x + step, y) - levelset(x - step, y)) / (2 * step)
        fy = (levelset(x, y + step) - levelset(x, y - step)) / (2 * step)
        scale = max(np.hypot(gx, gy), 1e-300)
        worst = max(worst, float(np.hypot(gx - fx, gy - fy) / scale))
    return worst
