# satrag
# See full license in LICENSE.txt.

import numpy as np
import pytest


@pytest.fixture
def random_seed():
    """seed the global numpy generator for one test and put its state back after"""
    state = np.random.get_state()
    np.random.seed(0)
    yield 0
    np.random.set_state(state)
