import warnings

import numpy as np
import pytest

# numba's threading-layer probe warns on some boxes; irrelevant here
warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
