import numpy as np
import pytest

from cutspec import problems
from cutspec.errors import UnknownProblem
from cutspec.geometry import Rectangle, Side
from cutspec.problems import (
    CircleEigen,
    CircleSource,
    FlowerSource,
    PlainEigen,
    PlainPoisson,
    SourceProblem,
    list_problems,
    read_reference,
    registry_problem,
    write_reference,
)

STEP = 1e-4


def _laplacian(u, x, y):
    return (u(x + STEP, y) + u(x - STEP, y) + u(x, y + STEP) + u(x, y - STEP) - 4 * u(x, y)) / STEP**2


def _interface_points(problem, count: int = 50):
    theta = np.linspace(0, 2 * np.pi, count, endpoint=False)
    descriptor = problem.levelset.descriptor
    if isinstance(problem, FlowerSource):
        r = descriptor.r0 + descriptor.amplitude * np.sin(descriptor.lobes * theta)
    else:
        r = np.full_like(theta, descriptor.radius)
    return descriptor.center[0] + r * np.cos(theta), descriptor.center[1] + r * np.sin(theta)


def test_registry():
    assert list_problems() == ["CircleSource", "FlowerSource", "CircleEigen", "PlainPoisson", "PlainEigen"]
    assert isinstance(registry_problem("FlowerSource"), FlowerSource)


def test_unknown_problem():
    with pytest.raises(UnknownProblem) as error:
        registry_problem("Ellipse")
    assert "CircleSource" in str(error.value)
    assert isinstance(error.value, KeyError)


def test_registry_overrides():
    problem = registry_problem("CircleSource", alpha_plus=5.0, domain=Rectangle(-2.0, 2.0, -2.0, 2.0))
    assert problem.alpha == {Side.POS: 5.0, Side.NEG: 1.0}
    assert problem.domain.x1 == 2.0


def test_circle_solution_is_continuous():
    problem = CircleSource()
    x, y = _interface_points(problem)
    value_jump, flux_jump = problem.interface_jumps(x, y)
    assert np.abs(value_jump).max() < 1e-13
    assert np.abs(flux_jump).max() < 1e-12
    assert problem.jump_data() is None
    exact = problem.solution()
    np.testing.assert_allclose(exact.value[Side.NEG](x, y), 0.5**3, rtol=1e-13)


def test_flower_jumps_are_nonhomogeneous():
    problem = FlowerSource()
    x, y = _interface_points(problem)
    assert np.all(np.abs(problem.levelset(x, y)) < 1e-13)
    jump = problem.exact().jump
    assert jump is not None
    assert np.all(np.abs(jump.dirichlet(x, y)) > 1e-3)
    assert np.any(np.abs(jump.neumann(x, y)) > 1e-3)


@pytest.mark.parametrize(
    "problem",
    [CircleSource(), FlowerSource(), PlainPoisson(), CircleSource(shift=(0.1, -0.05))],
    ids=lambda p: f"{p.name}{p.shift}",
)
def test_sources_match_solutions(problem, rng):
    exact, source = problem.solution(), problem.source()
    d = problem.domain
    checked = 0
    for side in (Side.POS, Side.NEG):
        points = rng.uniform([d.x0, d.y0], [d.x1, d.y1], size=(400, 2))
        x, y = points[:, 0], points[:, 1]
        phi = problem.levelset(x, y)
        keep = (phi * side.value > 0.05) & (np.hypot(x - problem.shift[0], y - problem.shift[1]) > 0.05)
        x, y = x[keep][:20], y[keep][:20]
        if not len(x):
            continue
        checked += 1
        u = exact.value[side]
        expected = -problem.alpha[side] * _laplacian(u, x, y)
        np.testing.assert_allclose(source[side](x, y), expected, rtol=1e-5, atol=1e-5)
        gx, gy = exact.gradient[side](x, y)
        np.testing.assert_allclose(gx, (u(x + STEP, y) - u(x - STEP, y)) / (2 * STEP), rtol=1e-6, atol=1e-7)
        np.testing.assert_allclose(gy, (u(x, y + STEP) - u(x, y - STEP)) / (2 * STEP), rtol=1e-6, atol=1e-7)
    assert checked > 0


def test_plain_poisson():
    problem = PlainPoisson()
    assert problem.domain == Rectangle(0.0, np.pi, 0.0, np.pi)
    x, y = np.array([0.3, 1.2]), np.array([2.0, 0.7])
    np.testing.assert_allclose(problem.source()[Side.NEG](x, y), 2 * np.sin(x) * np.sin(y))
    assert np.all(problem.levelset(x, y) < 0)


def test_plain_eigen_spectrum():
    np.testing.assert_array_equal(PlainEigen().reference_eigenvalues(6), [2, 5, 5, 8, 10, 10])
    np.testing.assert_array_equal(PlainEigen(alpha_minus=2.0).reference_eigenvalues(2), [4, 10])


def test_circle_eigen_geometry():
    problem = CircleEigen()
    assert problem.is_eigen
    assert problem.levelset(np.pi / 2, np.pi / 2) == pytest.approx(-np.pi / 4)
    assert problem.levelset(np.pi / 2, 3 * np.pi / 4) == pytest.approx(0.0, abs=1e-15)
    assert problem.defaults.gamma("h") == (4.1, 0.002)
    assert problem.defaults.gamma("p") == (0.1, 0.05)


def test_circle_eigen_without_pinned_reference(tmp_path, monkeypatch):
    monkeypatch.setattr(problems, "CIRCLE_EIGEN_REFERENCE", tmp_path / "missing.csv")
    assert CircleEigen().reference_eigenvalues(3) is None


def test_shipped_circle_eigen_reference():
    assert problems.CIRCLE_EIGEN_REFERENCE.exists()
    assert problems.CIRCLE_EIGEN_REFERENCE.read_text().startswith("# Generated by: cutspec.oracle")
    table = read_reference(problems.CIRCLE_EIGEN_REFERENCE)
    assert set(table["N"]) == {CircleEigen.reference_N}
    assert set(table["p"]) == {CircleEigen.reference_degree}
    values = CircleEigen().reference_eigenvalues(3)
    np.testing.assert_allclose(values, [9.36091428184199, 23.770657603880426, 23.770657603880863])
    assert np.all(np.diff(values) >= 0)


def test_pinned_reference(tmp_path, monkeypatch):
    path = tmp_path / "reference.csv"
    monkeypatch.setattr(problems, "CIRCLE_EIGEN_REFERENCE", path)
    problem = CircleEigen()
    values = [5.0123456789012345, 12.5, 12.75, 20.0]
    write_reference(path, values, problem, 96, 4, 4.1, 0.002, "cutspec.oracle --N 96")
    assert path.read_text().startswith("# Generated by: cutspec.oracle --N 96\n")
    table = read_reference(path)
    assert list(table["index"]) == [1, 2, 3, 4]
    assert table["eigenvalue"].iloc[0] == values[0]
    np.testing.assert_array_equal(problem.reference_eigenvalues(3), values[:3])
    # A different coefficient contrast can't reuse the pinned values
    assert CircleEigen(alpha_plus=10.0).reference_eigenvalues(3) is None


def test_source_problems_are_flagged():
    for name in list_problems():
        problem = registry_problem(name)
        assert problem.is_eigen != isinstance(problem, SourceProblem)
        assert problem.description
