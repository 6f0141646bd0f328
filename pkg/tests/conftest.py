import numpy as np
import pytest

from cyclic_interferometer.noise import NoiseConfig

MEASURED = {
    "brightness": 0.098,
    "g2": 0.019,
    "eta": 0.25,
    "detector_imbalance": [0.92, 0.90, 0.92, 0.91, 0.90, 0.90, 0.90, 0.90],
    "transmissivities": [0.503, 0.508, 0.505, 0.507, 0.506, 0.512, 0.5045, 0.534],
    "x": [0.852, 0.883, 0.941, 0.932],
    "toggles": ["multiphoton", "couplers", "detection"],
}


@pytest.fixture
def measured_dict():
    return dict(MEASURED)


@pytest.fixture
def measured_config():
    return NoiseConfig.from_dict(MEASURED)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
