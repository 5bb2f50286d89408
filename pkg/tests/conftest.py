import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from threadscf import make_grid  # noqa: E402


@pytest.fixture
def periodic_line():
    return make_grid("cartesian-1d", 40.0, 256)


@pytest.fixture
def harmonic_line():
    from threadscf.scf import PotentialSpec, external_potential
    grid = make_grid("cartesian-1d", 20.0, 256)
    return external_potential(PotentialSpec("harmonic"), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
