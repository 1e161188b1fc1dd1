import numpy as np
import pytest

from cutspec.errors import InvalidDomain
from cutspec.geometry import (
    Circle,
    ElementClass,
    LevelSet,
    Rectangle,
    Side,
    build_mesh,
    check_interface_assumption,
    classify_elements,
    refinement_consistent,
    sample_levelset_gradient_error,
)


def test_build_mesh(square):
    mesh = build_mesh(square, 4)
    assert mesh.num_elements == 16
    assert mesh.h == pytest.approx(0.5)
    assert not mesh.is_classified
    assert all(e.size == pytest.approx(0.5) for e in mesh.elements())


def test_build_mesh_on_the_eigen_domain():
    mesh = build_mesh(Rectangle(0.0, np.pi, 0.0, np.pi), 16)
    assert mesh.h == pytest.approx(np.pi / 16)


def test_build_mesh_rejects_bad_input(square):
    with pytest.raises(InvalidDomain):
        build_mesh(square, 1)
    with pytest.raises(InvalidDomain):
        build_mesh(Rectangle(0.0, 2.0, 0.0, 1.0), 4)
    with pytest.raises(InvalidDomain):
        Rectangle(1.0, 0.0, 0.0, 1.0)


def test_constant_levelset_gives_no_interface(square):
    mesh = classify_elements(build_mesh(square, 4), LevelSet.constant(-1.0))
    assert mesh.counts()[ElementClass.NEG] == 16
    assert mesh.ghost_faces(Side.NEG) == []
    assert mesh.ghost_faces(Side.POS) == []


def test_circle_classification(square, circle):
    mesh = classify_elements(build_mesh(square, 4), circle)
    counts = mesh.counts()
    # Four elements contain the arc, the eight touching it at a vertex stay outside
    assert counts[ElementClass.CUT] == 4
    assert counts[ElementClass.NEG] == 0
    assert counts[ElementClass.POS] == 12


def test_circle_classification_matches_brute_force(square, circle):
    mesh = classify_elements(build_mesh(square, 8), circle)
    u = np.linspace(0.0, 1.0, 101)
    for element in mesh.elements():
        xm, xM, ym, yM = element.bounds
        X, Y = np.meshgrid(xm + u * (xM - xm), ym + u * (yM - ym))
        values = circle(X, Y)
        expected_cut = values.min() < -1e-12 and values.max() > 1e-12
        assert (element.cls is ElementClass.CUT) == expected_cut, element.index


@pytest.mark.parametrize("N", [8, 16, 32])
def test_elements_touching_the_circle_at_a_vertex_are_not_cut(square, circle, N):
    mesh = classify_elements(build_mesh(square, N), circle)
    h = mesh.h
    # (0.5, 0) is a grid vertex on the circle, the element to its right only touches it
    i, j = mesh.locate(np.array([0.5 + 0.5 * h]), np.array([0.5 * h]))
    assert mesh.element((int(i[0]), int(j[0]))).cls is ElementClass.POS
    # and, by symmetry, the one left of (-0.5, 0)
    i, j = mesh.locate(np.array([-0.5 - 0.5 * h]), np.array([0.5 * h]))
    assert mesh.element((int(i[0]), int(j[0]))).cls is ElementClass.POS


def test_vertex_touching_element_keeps_its_side():
    domain = Rectangle(0.0, 2.0, 0.0, 2.0)
    # The line x + y = 1 crosses element (0, 0) and touches (1, 0) and (0, 1) at a corner
    levelset = LevelSet.half_plane((1.0, 1.0), 1.0)
    mesh = classify_elements(build_mesh(domain, 2), levelset)
    assert mesh.element((0, 0)).cls is ElementClass.CUT
    assert mesh.element((1, 0)).cls is ElementClass.POS
    assert mesh.element((0, 1)).cls is ElementClass.POS
    assert mesh.element((1, 1)).cls is ElementClass.POS
    assert check_interface_assumption(mesh, levelset).ok


def test_zero_set_on_shared_edges_cuts_both_neighbors(square):
    mesh = classify_elements(build_mesh(square, 4), LevelSet.half_plane((1.0, 0.0), 0.0))
    cut = {e.index for e in mesh.elements_of(ElementClass.CUT)}
    assert cut == {(i, j) for i in (1, 2) for j in range(4)}


def test_ghost_faces_match_definition(square, circle):
    mesh = classify_elements(build_mesh(square, 4), circle)
    for side in (Side.NEG, Side.POS):
        expected = set()
        for face in mesh.interior_faces():
            left, right = mesh.element(face.left).cls, mesh.element(face.right).cls
            if ElementClass.CUT in (left, right) and left.touches(side) and right.touches(side):
                expected.add(face.key)
        faces = [face.key for face in mesh.ghost_faces(side)]
        assert len(faces) == len(set(faces))
        assert set(faces) == expected


def test_single_cut_element_has_four_ghost_faces():
    domain = Rectangle(0.0, 3.0, 0.0, 3.0)
    small = LevelSet.circle((1.5, 1.5), 0.2)
    mesh = classify_elements(build_mesh(domain, 3), small)
    assert mesh.counts()[ElementClass.CUT] == 1
    assert len(mesh.ghost_faces(Side.POS)) == 4
    # Its neighbors are all positive, so none of them belongs to the negative submesh
    assert mesh.ghost_faces(Side.NEG) == []


def test_face_normals_point_from_left_to_right(circle_mesh):
    for face in circle_mesh.interior_faces():
        left, right = circle_mesh.element(face.left), circle_mesh.element(face.right)
        step = np.subtract(right.center, left.center) / circle_mesh.h
        np.testing.assert_allclose(step, face.normal)
        assert face.length == pytest.approx(circle_mesh.h)


def test_interface_assumption_holds_on_resolved_mesh(square, circle):
    mesh = classify_elements(build_mesh(square, 16), circle)
    report = check_interface_assumption(mesh, circle)
    assert report.ok
    for points in report.crossings.values():
        for x, y in points:
            assert abs(circle(x, y)) < 1e-12


def test_interface_assumption_fails_when_an_edge_is_crossed_twice(square):
    levelset = LevelSet.circle((0.5, 0.0), 0.3)
    mesh = classify_elements(build_mesh(square, 2), levelset)
    report = check_interface_assumption(mesh, levelset)
    assert not report.ok
    assert (1, 1) in report.violations


def test_interface_assumption_holds_vacuously(square):
    levelset = LevelSet.constant(1.0)
    mesh = classify_elements(build_mesh(square, 4), levelset)
    assert check_interface_assumption(mesh, levelset).ok


def test_refinement_consistency(square, circle):
    coarse = classify_elements(build_mesh(square, 8), circle)
    fine = classify_elements(build_mesh(square, 16), circle)
    assert refinement_consistent(coarse, fine)


def test_translated_levelset_moves_descriptor(circle):
    moved = circle.translated((0.25, -0.5))
    assert moved.descriptor == Circle((0.25, -0.5), 0.5)
    assert moved(0.25, 0.0) == pytest.approx(0.0)


@pytest.mark.parametrize(
    "levelset",
    [
        LevelSet.circle((0.1, -0.2), 0.5),
        LevelSet.flower((0.0, 0.0), 0.5, 1 / 7, 5),
        LevelSet.half_plane((0.6, 0.8), 0.1),
    ],
)
def test_analytic_gradients(levelset, rng):
    points = rng.uniform(-1, 1, size=(25, 2))
    assert sample_levelset_gradient_error(levelset, points) < 1e-6


def test_locate_points(circle_mesh):
    i, j = circle_mesh.locate(np.array([-1.0, 0.99, 0.1]), np.array([-1.0, 1.0, -0.1]))
    assert i.tolist() == [0, 7, 4]
    assert j.tolist() == [0, 7, 3]
