import numpy as np
import pytest

from fem.forms import assemble_mixed_operators
from fem.mesh import build_structured_mesh
from fem.spaces import LagrangeSpace
from nonlinear.problems import preset


@pytest.fixture(scope='session')
def mesh4():
    return build_structured_mesh(4)


@pytest.fixture(scope='session')
def space4(mesh4):
    return LagrangeSpace(mesh4, 2)


@pytest.fixture(scope='session')
def ops4(space4):
    return assemble_mixed_operators(space4)


@pytest.fixture(scope='session')
def space8():
    return LagrangeSpace(build_structured_mesh(8), 2)


@pytest.fixture(scope='session')
def ops8(space8):
    return assemble_mixed_operators(space8)


@pytest.fixture(scope='session')
def quadratic():
    return preset('quadratic')


@pytest.fixture(scope='session')
def exponential():
    return preset('exponential')


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
