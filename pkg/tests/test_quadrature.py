import numpy as np
import pytest
from scipy import integrate

from cutspec.errors import GraphConditionViolated, NoSignChange
from cutspec.geometry import Element, ElementClass, Face, LevelSet, Side, build_mesh, classify_elements
from cutspec.quadrature import (
    MeshQuadrature,
    cut_volume_rule,
    face_rule,
    interface_rule,
    ridder_root,
    roots_along,
    split_element,
    tensor_rule,
)

UNIT = Element((0, 0), (0.0, 1.0, 0.0, 1.0), ElementClass.CUT)


def test_ridder_root_linear():
    assert ridder_root(lambda x: x - 0.3, 0.0, 1.0) == pytest.approx(0.3, abs=1e-14)


def test_ridder_root_cosine():
    assert ridder_root(np.cos, 1.0, 2.0) == pytest.approx(np.pi / 2, abs=1e-12)


def test_ridder_root_needs_a_bracket():
    with pytest.raises(NoSignChange):
        ridder_root(lambda x: x**2 + 1, 0.0, 1.0)


def test_ridder_root_on_a_negative_bracket():
    root = ridder_root(lambda x: np.sin(x + 0.5796), -0.580078125, -0.5791015625)
    assert root == pytest.approx(-0.5796, abs=1e-14)


def test_ridder_root_tolerates_rounding_noise():
    # Noise of a few ulps around the root keeps the bracket from shrinking to the tolerance
    def noisy(x):
        return (x + 0.5796) + 4e-16 * np.sin(1e17 * x)

    root = ridder_root(noisy, -0.580078125, -0.5791015625, tol=1e-18)
    assert root == pytest.approx(-0.5796, abs=1e-14)


def test_roots_along_finds_every_sign_change():
    roots = roots_along(lambda x: np.sin(3 * np.pi * x), 0.05, 0.95, 1e-14)
    np.testing.assert_allclose(roots, [1 / 3, 2 / 3], atol=1e-12)


def test_tensor_rule_on_uncut_element():
    rule = tensor_rule((0.0, 0.5, 0.0, 0.5), 4)
    assert rule.size == 16
    assert rule.measure == pytest.approx(0.25)


def test_uncut_element_takes_full_rule_on_its_side():
    element = Element((0, 0), (0.0, 0.5, 0.0, 0.5), ElementClass.POS)
    levelset = LevelSet.constant(1.0)
    assert cut_volume_rule(element, levelset, Side.POS, 4).measure == pytest.approx(0.25)
    assert cut_volume_rule(element, levelset, Side.NEG, 4).size == 0
    assert interface_rule(element, levelset, 4).size == 0


def test_half_plane_splits_element_in_halves():
    element = Element((0, 0), (-1.0, 1.0, -1.0, 1.0), ElementClass.CUT)
    levelset = LevelSet.half_plane((1.0, 0.0), 0.0)
    rules = split_element(element, levelset, 6)
    assert rules.neg.measure == pytest.approx(2.0, abs=1e-13)
    assert rules.pos.measure == pytest.approx(2.0, abs=1e-13)
    assert np.all(rules.neg.points[:, 0] <= 0)
    assert rules.surface.measure == pytest.approx(2.0, abs=1e-13)


def test_straight_interface():
    rules = split_element(UNIT, LevelSet.half_plane((0.0, 1.0), 0.2), 5)
    assert rules.surface.measure == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(rules.surface.normals, np.tile([0.0, 1.0], (5, 1)), atol=1e-14)
    np.testing.assert_allclose(rules.surface.points[:, 1], 0.2, atol=1e-14)
    assert rules.neg.measure == pytest.approx(0.2, abs=1e-13)


def test_tilted_interface_length():
    rules = split_element(UNIT, LevelSet.half_plane((-1.0, 1.0), 0.0), 6)
    assert rules.surface.measure == pytest.approx(np.sqrt(2), abs=1e-13)
    assert rules.neg.measure == pytest.approx(0.5, abs=1e-13)
    np.testing.assert_allclose(np.linalg.norm(rules.surface.normals, axis=1), 1.0, atol=1e-12)


def test_polynomial_integrals_on_straight_cut():
    rules = split_element(UNIT, LevelSet.half_plane((0.0, 1.0), 0.2), 4)
    x, y = rules.pos.points[:, 0], rules.pos.points[:, 1]
    # Integral of x^2 y over [0, 1] x [0.2, 1]
    assert rules.pos.integrate(x**2 * y) == pytest.approx((1 / 3) * (1 - 0.04) / 2, abs=1e-14)


def test_circle_area_and_perimeter(square, circle):
    mesh = classify_elements(build_mesh(square, 16), circle)
    quadrature = MeshQuadrature(mesh, circle, 10)
    assert quadrature.measure(Side.NEG) == pytest.approx(np.pi * 0.25, abs=1e-10)
    assert quadrature.measure(Side.NEG) + quadrature.measure(Side.POS) == pytest.approx(4.0, abs=1e-10)
    assert quadrature.interface_length() == pytest.approx(np.pi, abs=1e-10)


def test_interface_points_lie_on_the_interface(circle_mesh, circle):
    quadrature = MeshQuadrature(circle_mesh, circle, 6)
    for element in circle_mesh.elements_of(ElementClass.CUT):
        surface = quadrature.rules(element).surface
        if not surface.size:
            continue
        x, y = surface.points[:, 0], surface.points[:, 1]
        assert np.max(np.abs(circle(x, y))) < 1e-13
        # Normals point away from the center, into the positive side
        np.testing.assert_allclose(surface.normals, surface.points / np.hypot(x, y)[:, None], atol=1e-12)


def test_rules_of_cut_elements_are_cached(circle_mesh, circle):
    quadrature = MeshQuadrature(circle_mesh, circle, 5)
    element = circle_mesh.elements_of(ElementClass.CUT)[0]
    assert quadrature.rules(element) is quadrature.rules(element)


def test_column_with_two_roots_is_rejected():
    # A horizontal band crosses every vertical column twice
    levelset = LevelSet(
        value=lambda x, y: np.abs(np.asarray(y, dtype=float) - 0.45) - 0.1,
        gradient=lambda x, y: (np.zeros(np.shape(y)), np.sign(np.asarray(y, dtype=float) - 0.45)),
    )
    with pytest.raises(GraphConditionViolated):
        split_element(UNIT, levelset, 4)


def test_face_rule():
    face = Face((0, 0), (1, 0), (0.5, 0.0), (0.5, 0.5), (1.0, 0.0))
    points, weights = face_rule(face, 3)
    assert weights.sum() == pytest.approx(0.5)
    np.testing.assert_allclose(points[:, 0], 0.5)
    # Linear functions integrate to their midpoint value times the length
    assert np.dot(weights, 2 * points[:, 1] + 1) == pytest.approx(1.25 * 0.5)


def test_face_rule_is_exact_to_degree_five():
    face = Face((0, 0), (0, 1), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
    points, weights = face_rule(face, 3)
    assert np.dot(weights, points[:, 0] ** 4) == pytest.approx(0.2, abs=1e-14)


FLOWER = LevelSet.flower((0.0, 0.0), 0.5, 1 / 7, 5)
# Petal tips bend faster than the coarser grid resolves
FLOWER_TOLERANCE = {16: 1e-6, 32: 1e-8}


def _flower_radius(theta):
    return 0.5 + np.sin(5 * theta) / 7


def _polar_integral(integrand) -> float:
    value, _ = integrate.quad(integrand, 0, 2 * np.pi, limit=200)
    return value


@pytest.mark.parametrize("N", [16, 32])
def test_flower_quadrature(square, N):
    mesh = classify_elements(build_mesh(square, N), FLOWER)
    quadrature = MeshQuadrature(mesh, FLOWER, 10)
    rtol = FLOWER_TOLERANCE[N]
    area = np.pi * (0.25 + 0.5 / 49)
    length = _polar_integral(lambda t: np.hypot(_flower_radius(t), 5 * np.cos(5 * t) / 7))
    assert quadrature.measure(Side.NEG) == pytest.approx(area, rel=rtol)
    assert quadrature.measure(Side.NEG) + quadrature.measure(Side.POS) == pytest.approx(4.0, abs=1e-12)
    assert quadrature.interface_length() == pytest.approx(length, rel=rtol)


@pytest.mark.parametrize("N", [16, 32])
def test_flower_moments(square, N):
    mesh = classify_elements(build_mesh(square, N), FLOWER)
    quadrature = MeshQuadrature(mesh, FLOWER, 10)
    rtol = FLOWER_TOLERANCE[N]
    # Moments of the region inside the flower in polar form
    expected = {
        "x2": _polar_integral(lambda t: np.cos(t) ** 2 * _flower_radius(t) ** 4 / 4),
        "y4": _polar_integral(lambda t: np.sin(t) ** 4 * _flower_radius(t) ** 6 / 6),
        "x2y2": _polar_integral(lambda t: (np.cos(t) * np.sin(t)) ** 2 * _flower_radius(t) ** 6 / 6),
    }
    computed = {key: 0.0 for key in expected}
    for element in mesh.elements():
        rule = quadrature.rules(element).neg
        if not rule.size:
            continue
        x, y = rule.points[:, 0], rule.points[:, 1]
        computed["x2"] += rule.integrate(x**2)
        computed["y4"] += rule.integrate(y**4)
        computed["x2y2"] += rule.integrate(x**2 * y**2)
    for key, value in expected.items():
        assert computed[key] == pytest.approx(value, rel=rtol), key


@pytest.mark.parametrize("levelset, N", [("circle", 8), ("circle", 16), ("flower", 16), ("flower", 32)])
def test_cut_elements_are_partitioned(square, circle, levelset, N):
    levelset = circle if levelset == "circle" else FLOWER
    mesh = classify_elements(build_mesh(square, N), levelset)
    quadrature = MeshQuadrature(mesh, levelset, 6)
    for element in mesh.elements_of(ElementClass.CUT):
        rules = quadrature.rules(element)
        total = rules.neg.measure + rules.pos.measure
        assert total == pytest.approx(mesh.h**2, abs=1e-12), element.index
        # Every interface element holds a piece of both subdomains
        assert rules.neg.measure > 0 and rules.pos.measure > 0, element.index
        assert rules.surface.size > 0, element.index
