from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import bisect, brentq, ridder

from .basis import gauss_legendre
from .errors import GraphConditionViolated, NoSignChange, NonConvergence
from .geometry import (
    EDGE_SAMPLES,
    ZERO_TOLERANCE,
    CutMesh,
    Element,
    ElementClass,
    ElementIndex,
    Face,
    LevelSet,
    Side,
    classify_element,
)

logger = logging.getLogger(__name__)

# Root brackets are shrunk down to this fraction of the element size
ROOT_TOLERANCE = 1e-14
MAX_RIDDER_ITERATIONS = 200
EPS = float(np.finfo(float).eps)
# Smallest root tolerance, in units of eps times the magnitude of the bracket ends
ULP_FLOOR = 16


@dataclass(frozen=True)
class VolumeRule:
    """Quadrature on K ∩ Ω± in physical coordinates (area measure)."""

    points: np.ndarray
    weights: np.ndarray

    @staticmethod
    def empty() -> "VolumeRule":
        return VolumeRule(np.zeros((0, 2)), np.zeros(0))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class SurfaceRule:
    """Quadrature on Γ ∩ K (arc-length measure) with unit normals
    pointing from Ω- to Ω+."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray

    @staticmethod
    def empty() -> "SurfaceRule":
        return SurfaceRule(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class ElementRules:
    neg: VolumeRule
    pos: VolumeRule
    surface: SurfaceRule

    def volume(self, side: Side) -> VolumeRule:
        return self.neg if side is Side.NEG else self.pos


class _RootFound(Exception):
    def __init__(self, x: float):
        super().__init__(x)
        self.x = x


def _stop_on_small_residual(f: Callable[[float], float], threshold: float) -> Callable[[float], float]:
    def wrapped(x: float) -> float:
        value = float(f(x))
        if abs(value) <= threshold:
            raise _RootFound(float(x))
        return value

    return wrapped


def ridder_root(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Optional[float] = None,
) -> float:
    """Find a root of ``f`` bracketed by [a, b] with Ridder's method.

    The tolerance is floored at a few ulps of the bracket ends, and the
    search also stops once |f| drops below the secant slope of the bracket
    times the tolerance. When rounding noise in ``f`` keeps Ridder's method
    from meeting the tolerance, Brent's method and then bisection take over.

    Parameters
    ----------
    f: (float) -> float
    a, b: float
        Bracket with f(a) f(b) < 0.
    tol: Optional[float]
        Absolute tolerance on the bracket width.
        Defaults to 1e-14 times the bracket width.

    Returns
    -------
    root: float

    Raises
    ------
    NoSignChange
        If f(a) and f(b) have the same sign.
    NonConvergence
        If no method reaches the tolerance.
    """
    fa, fb = float(f(a)), float(f(b))
    if not fa * fb < 0:
        raise NoSignChange(f"f({a}) = {fa} and f({b}) = {fb} do not bracket a root")
    if tol is None:
        tol = ROOT_TOLERANCE * abs(b - a)
    xtol = max(tol, ULP_FLOOR * EPS * max(abs(a), abs(b)), np.finfo(float).tiny)
    slope = abs(fb - fa) / abs(b - a)
    g = _stop_on_small_residual(f, slope * xtol)

    failure = None
    for method in (ridder, brentq, bisect):
        try:
            return float(method(g, a, b, xtol=xtol, rtol=4 * EPS, maxiter=MAX_RIDDER_ITERATIONS))
        except _RootFound as found:
            return found.x
        except RuntimeError as error:
            logger.debug(f"{method.__name__} failed on [{a}, {b}]: {error}")
            failure = error
    raise NonConvergence(f"Root polishing failed on [{a}, {b}]: {failure}") from failure


def roots_along(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    samples: int = EDGE_SAMPLES,
) -> List[float]:
    """Locate the zeros of a 1D function on [a, b] by sampling followed by
    Ridder polishing. Zeros sitting exactly on the interval ends are ignored."""
    grid = np.linspace(a, b, samples + 1)
    values = np.asarray(f(grid), dtype=float)
    roots = [float(u) for u in grid[1:-1][values[1:-1] == 0]]
    changes = np.nonzero(values[:-1] * values[1:] < 0)[0]
    for k in changes:
        lo, hi = grid[k], grid[k + 1]
        roots.append(ridder_root(lambda u: float(f(np.array(u))), lo, hi, tol))
    return sorted(roots)


def tensor_rule(bounds: Tuple[float, float, float, float], q: int) -> VolumeRule:
    """q x q Gauss-Legendre rule on an axis-aligned rectangle."""
    xm, xM, ym, yM = bounds
    gauss = gauss_legendre(q)
    xs, wx = gauss.mapped(xm, xM)
    ys, wy = gauss.mapped(ym, yM)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return VolumeRule(np.stack([X.ravel(), Y.ravel()], axis=1), np.outer(wx, wy).ravel())


def face_rule(face: Face, q: int) -> Tuple[np.ndarray, np.ndarray]:
    """q-point Gauss rule on a face, weights in arc-length measure.

    Returns
    -------
    points: np.ndarray, shape (q, 2)
    weights: np.ndarray, shape (q,)
    """
    gauss = gauss_legendre(q)
    u, w = gauss.mapped(0.0, 1.0)
    start, end = np.asarray(face.start), np.asarray(face.end)
    return start + u[:, None] * (end - start), w * face.length


class _LocalFrame:
    """Element seen as base coordinate b times height coordinate t."""

    def __init__(self, element: Element, levelset: LevelSet):
        self.element = element
        self.levelset = levelset
        xm, xM, ym, yM = element.bounds
        gx, gy = levelset.gradient(np.array(element.center[0]), np.array(element.center[1]))
        # The height direction is the one with the larger gradient component
        self.height_axis = 0 if abs(float(gx)) >= abs(float(gy)) else 1
        if self.height_axis == 0:
            self.base, self.height = (ym, yM), (xm, xM)
        else:
            self.base, self.height = (xm, xM), (ym, yM)

    def xy(self, b, t) -> Tuple[np.ndarray, np.ndarray]:
        b, t = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(t, dtype=float))
        return (t, b) if self.height_axis == 0 else (b, t)

    def phi(self, b, t) -> np.ndarray:
        return np.asarray(self.levelset(*self.xy(b, t)), dtype=float)

    def points(self, b, t) -> np.ndarray:
        x, y = self.xy(b, t)
        return np.stack([np.ravel(x), np.ravel(y)], axis=1)


def _has_crossing(frame: _LocalFrame, b0: float, b1: float) -> bool:
    """Whether the interface meets the sub-rectangle [b0, b1] x height,
    judged by strict sign changes on its boundary and center."""
    tm, tM = frame.height
    u = np.linspace(0.0, 1.0, EDGE_SAMPLES + 1)
    bs = np.concatenate([b0 + u * (b1 - b0), np.full_like(u, b1), b0 + u * (b1 - b0), np.full_like(u, b0), [0.5 * (b0 + b1)]])
    ts = np.concatenate([np.full_like(u, tm), tm + u * (tM - tm), np.full_like(u, tM), tm + u * (tM - tm), [0.5 * (tm + tM)]])
    values = frame.phi(bs, ts)
    tolerance = ZERO_TOLERANCE * frame.element.size
    return bool(np.any(values < -tolerance) and np.any(values > tolerance))


def _partition(roots: List[float], lo: float, hi: float, tol: float) -> List[float]:
    result = [lo]
    for value in sorted(roots):
        if lo + tol < value < hi - tol and value - result[-1] > tol:
            result.append(value)
    result.append(hi)
    return result


def split_element(element: Element, levelset: LevelSet, q: int) -> ElementRules:
    """High-order quadrature on both parts of an interface element and on
    its interface segment.

    The height direction is the axis of the larger gradient component at
    the element center (ties go to x). The base interval is split at the
    zeros of phi on the two edges orthogonal to the height direction. Sub-
    rectangles without interface get a tensor Gauss rule. Otherwise each of
    the q Gauss columns is split at its single height root, located with
    Ridder's method, and each part gets a q-point Gauss rule.
    Interface weights carry the factor |grad phi| / |d phi / d height|.
    """
    h = element.size
    tol = ROOT_TOLERANCE * h
    frame = _LocalFrame(element, levelset)
    (bm, bM), (tm, tM) = frame.base, frame.height
    gauss = gauss_legendre(q)

    roots = []
    for t_edge in (tm, tM):
        roots.extend(roots_along(lambda b: frame.phi(b, t_edge), bm, bM, tol))
    breaks = _partition(roots, bm, bM, tol)

    volume: Dict[Side, List[Tuple[np.ndarray, np.ndarray]]] = {Side.NEG: [], Side.POS: []}
    surface_points, surface_weights, surface_normals = [], [], []

    for b0, b1 in zip(breaks[:-1], breaks[1:]):
        if not _has_crossing(frame, b0, b1):
            bs, wb = gauss.mapped(b0, b1)
            ts, wt = gauss.mapped(tm, tM)
            B, T = np.meshgrid(bs, ts, indexing="ij")
            side = Side.NEG if frame.phi(0.5 * (b0 + b1), 0.5 * (tm + tM)) <= 0 else Side.POS
            volume[side].append((frame.points(B.ravel(), T.ravel()), np.outer(wb, wt).ravel()))
            continue

        bs, wb = gauss.mapped(b0, b1)
        for b, w in zip(bs, wb):
            roots = roots_along(lambda t: frame.phi(b, t), tm, tM, tol)
            if len(roots) > 1:
                raise GraphConditionViolated(element.index, len(roots))
            cuts = [tm] + roots + [tM]
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                if hi - lo <= tol:
                    continue
                ts, wt = gauss.mapped(lo, hi)
                side = Side.NEG if frame.phi(b, 0.5 * (lo + hi)) <= 0 else Side.POS
                volume[side].append((frame.points(np.full_like(ts, b), ts), w * wt))
            for s in roots:
                x, y = frame.xy(b, s)
                gx, gy = levelset.gradient(x, y)
                grad = np.array([float(gx), float(gy)])
                norm = np.linalg.norm(grad)
                surface_points.append([float(x), float(y)])
                surface_weights.append(w * norm / abs(grad[frame.height_axis]))
                surface_normals.append(grad / norm)

    def collect(side: Side) -> VolumeRule:
        if not volume[side]:
            return VolumeRule.empty()
        points, weights = zip(*volume[side])
        return VolumeRule(np.concatenate(points), np.concatenate(weights))

    surface = SurfaceRule.empty()
    if surface_points:
        surface = SurfaceRule(
            np.asarray(surface_points), np.asarray(surface_weights), np.asarray(surface_normals)
        )
    return ElementRules(collect(Side.NEG), collect(Side.POS), surface)


def element_rules(element: Element, levelset: LevelSet, q: int) -> ElementRules:
    cls = element.cls if element.cls is not None else classify_element(element, levelset)
    if cls is ElementClass.CUT:
        return split_element(element, levelset, q)
    full = tensor_rule(element.bounds, q)
    if cls is ElementClass.NEG:
        return ElementRules(full, VolumeRule.empty(), SurfaceRule.empty())
    return ElementRules(VolumeRule.empty(), full, SurfaceRule.empty())


def cut_volume_rule(element: Element, levelset: LevelSet, side: Side, q: int) -> VolumeRule:
    """Quadrature on K ∩ Ω_side. Empty when that part has zero measure."""
    return element_rules(element, levelset, q).volume(side)


def interface_rule(element: Element, levelset: LevelSet, q: int) -> SurfaceRule:
    """Quadrature on the interface segment inside an interface element."""
    return element_rules(element, levelset, q).surface


class MeshQuadrature:
    """Per-element quadrature rules of a classified mesh at a fixed order.

    Rules of interface elements are computed once and cached. Uncut elements
    get a tensor Gauss rule on every call.

    Parameters
    ----------
    mesh: CutMesh
        Classified mesh.
    levelset: LevelSet
    q: int
        Gauss points per direction.
    """

    def __init__(self, mesh: CutMesh, levelset: LevelSet, q: int):
        assert mesh.is_classified, "Quadrature needs a classified mesh"
        self.mesh = mesh
        self.levelset = levelset
        self.q = q
        self._cut_rules: Dict[ElementIndex, ElementRules] = {}

    def rules(self, element: Element) -> ElementRules:
        if element.cls is not ElementClass.CUT:
            return element_rules(element, self.levelset, self.q)
        if element.index not in self._cut_rules:
            self._cut_rules[element.index] = split_element(element, self.levelset, self.q)
        return self._cut_rules[element.index]

    def measure(self, side: Side) -> float:
        """Total area of Ω_side as seen by the quadrature."""
        return sum(self.rules(e).volume(side).measure for e in self.mesh.elements())

    def interface_length(self) -> float:
        return sum(
            self.rules(e).surface.measure for e in self.mesh.elements_of(ElementClass.CUT)
        )
