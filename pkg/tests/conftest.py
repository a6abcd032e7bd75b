import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from groundpose import CameraIntrinsics, ObjectState, car_atlas, random_rotation


@pytest.fixture(scope="session")
def atlas():
    return car_atlas()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cam():
    return CameraIntrinsics(focal=1000.0, principal_point=np.array([640.0, 480.0]))


@pytest.fixture
def state(atlas, rng):
    """A generic in-front-of-camera object with nonzero shape coefficients."""
    return ObjectState(
        rotation=random_rotation(rng),
        translation=np.array([1.5, -0.8, 25.0]),
        coeffs=0.7 * np.ones(atlas.n_components),
    )
