# pylint: skip-file
import numpy as np
import pytest

from geobridge import GeometricState
from geobridge.geom import project_com_free


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_state(rng):
    def factory(n_atoms=4, features=None, centered=False, scale=1.0):
        coords = scale * rng.standard_normal((n_atoms, 3))
        if features is None:
            features = np.zeros(n_atoms, dtype=np.int64)
        state = GeometricState(coords=coords, features=features)
        return project_com_free(state) if centered else state
    return factory
