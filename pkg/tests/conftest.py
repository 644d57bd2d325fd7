import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from simulation.core import UniformGrid  # noqa: E402


@pytest.fixture
def unit_grid():
    return UniformGrid(0.0, 1.0, 64)


@pytest.fixture
def fine_grid():
    return UniformGrid(0.0, 1.0, 512)
