import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from isotori.lattice_grid import build_grid, square_grid  # noqa: E402
from isotori.mesh_core import Mesh  # noqa: E402

# a few grids of different shapes: square, skew, and the two-vertex grid
GRID_LS = {
    "square8": [[8, 0], [0, 8]],
    "skew": [[8, -2], [2, 8]],
    "thin": [[6, 1], [0, 5]],
    "diamond": [[4, -4], [4, 4]],
}


def random_mesh(grid, n, rng, scale=1.0):
    return Mesh(grid, scale * rng.standard_normal((grid.size, 2 * n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(GRID_LS))
def grid(request):
    return build_grid(GRID_LS[request.param], 8)


@pytest.fixture
def grid8():
    return square_grid(8)
