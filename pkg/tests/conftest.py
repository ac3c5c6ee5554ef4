"""
Pytest configuration for resunmix tests.
"""

import numpy as np
import pytest

from resunmix.config import reset_config
from resunmix.unmixing.models import AbundanceMatrix, EndmemberMatrix, SpectralCube
from resunmix.unmixing.synth import generate_endmembers, sample_abundances


@pytest.fixture(autouse=True)
def fresh_config():
    """Every test starts and ends with the default configuration."""
    reset_config()
    yield
    reset_config()


@pytest.fixture
def rng():
    """Seeded random generator for test data."""
    return np.random.default_rng(12345)


@pytest.fixture
def endmembers():
    """Three synthetic endmembers over 50 bands."""
    return generate_endmembers(50, 3, seed=7)


@pytest.fixture
def abundances():
    """Abundances of a 5x5 image with three endmembers."""
    return sample_abundances(25, 3, seed=3)


@pytest.fixture
def lmm_cube(endmembers: EndmemberMatrix, abundances: AbundanceMatrix):
    """Noiseless linear mixture Y = M A on a 5x5 grid."""
    return SpectralCube(data=endmembers.data @ abundances.data, rows=5, cols=5)


@pytest.fixture
def tiny_endmembers():
    """Two well-separated endmembers over 8 bands."""
    return EndmemberMatrix(
        data=np.array(
            [
                [0.9, 0.1],
                [0.8, 0.2],
                [0.7, 0.3],
                [0.6, 0.4],
                [0.4, 0.6],
                [0.3, 0.7],
                [0.2, 0.8],
                [0.1, 0.9],
            ]
        )
    )
