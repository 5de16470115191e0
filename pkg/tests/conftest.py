import numpy as np
import pytest

from dosalloc.channel import ChannelModel
from dosalloc.model import SystemModel, build_ladder, steady_state

EXAMPLE_A = [[1.2, 0.1], [0.0, 1.0]]


def example_system():
    return SystemModel(EXAMPLE_A, np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))


@pytest.fixture(scope="session")
def system():
    return example_system()


@pytest.fixture(scope="session")
def ladder(system):
    return build_ladder(system, steady_state(system), 30)


@pytest.fixture(scope="session")
def channel():
    return ChannelModel(delta_s=10, G_s=1, G_a=1, sigma2=2, L=20)
