import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsdelta.domains import build_initial_mesh, catalog_shape, mesh_from_cells

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def square():
    return build_initial_mesh(catalog_shape("unit_square"))


@pytest.fixture
def two_triangles():
    """Unit square cut by the (0,0)-(1,1) diagonal."""
    return mesh_from_cells([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])


@pytest.fixture
def reference_triangle():
    return mesh_from_cells([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
