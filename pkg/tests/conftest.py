import numpy as np
import pytest

from bonsai.rng import Rand
from bonsai.tree import PointCloud


@pytest.fixture
def rand():
    return Rand(20260816)


@pytest.fixture
def small_cloud(rand):
    """A few hundred points with structure: two blobs plus scattered ground."""
    a = rand.normal(3 * 120, sigma=0.4).reshape(-1, 3) + np.array([4.0, 1.0, 0.5])
    b = rand.normal(3 * 120, sigma=0.4).reshape(-1, 3) + np.array([-3.0, -2.0, 0.5])
    g = np.column_stack(
        [rand.uniform(80, -20, 20), rand.uniform(80, -20, 20), rand.normal(80, 0.05)]
    )
    return PointCloud(np.vstack([a, b, g]).astype(np.float32), "fixture")


def random_cloud(rand, n, span=20.0):
    """n uniform points in a cube, float32."""
    pts = rand.uniform(3 * n, -span, span).reshape(n, 3)
    return PointCloud(pts.astype(np.float32))
