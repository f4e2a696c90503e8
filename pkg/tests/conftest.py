import numpy as np
import pytest

from rclab.lattice import build_box, build_rect
from rclab.rcmodel import BoundaryCondition


@pytest.fixture(scope="session")
def box1():
    return build_box(1)


@pytest.fixture(scope="session")
def box2():
    return build_box(2)


@pytest.fixture(scope="session")
def single_edge():
    return build_rect(0, 1, 0, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def free(domain):
    return BoundaryCondition.free(domain)


def wired(domain):
    return BoundaryCondition.wired(domain)
