import numpy as np
import pytest

from wgbiot.mesh import Mesh, generate_hybrid, generate_rectangular, generate_triangular
from wgbiot.system import build_discretization


@pytest.fixture(scope="session")
def tri2():
    return generate_triangular(2)


@pytest.fixture(scope="session")
def rect2():
    return generate_rectangular(2)


@pytest.fixture(scope="session")
def hybrid2():
    return generate_hybrid(2)


@pytest.fixture(scope="session")
def single_triangle():
    return Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [(0, 1, 2)])


@pytest.fixture(scope="session")
def tri2_disc(tri2):
    return build_discretization(tri2, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
