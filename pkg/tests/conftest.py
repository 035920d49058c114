import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from voxprep.volume import Mask3D, Volume3D


def make_volume(data, spacing=(1.0, 1.0, 1.0), modality=None):
    data = np.asarray(data, dtype=np.float64)
    aff = np.eye(4)
    aff[0, 0], aff[1, 1], aff[2, 2] = spacing
    if modality is None:
        return Volume3D(data, spacing, aff)
    return Volume3D(data, spacing, aff, modality)


def make_mask(data, spacing=(1.0, 1.0, 1.0)):
    data = np.asarray(data, dtype=bool)
    aff = np.eye(4)
    aff[0, 0], aff[1, 1], aff[2, 2] = spacing
    return Mask3D(data, spacing, aff)


def random_mask(rng, shape, p=0.3):
    return make_mask(rng.random(shape) < p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
