import numpy as np
import pytest

from cutspec.basis import Basis2D
from cutspec.geometry import LevelSet, Rectangle, build_mesh, classify_elements


@pytest.fixture
def square() -> Rectangle:
    return Rectangle(-1.0, 1.0, -1.0, 1.0)


@pytest.fixture
def circle() -> LevelSet:
    return LevelSet.circle((0.0, 0.0), 0.5)


@pytest.fixture
def circle_mesh(square, circle):
    return classify_elements(build_mesh(square, 8), circle)


@pytest.fixture
def plain_mesh():
    domain = Rectangle(0.0, np.pi, 0.0, np.pi)
    return classify_elements(build_mesh(domain, 4), LevelSet.constant(-1.0))


@pytest.fixture
def quadratic() -> Basis2D:
    return Basis2D(2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
