import numpy as np
import pytest

from nsdelta.domains import (CATALOG, build_initial_mesh, catalog_shape, custom_polygon,
                             is_simple_polygon)
from nsdelta.mesh import MeshError, conformity_violations, pairwise_violations


def test_unit_square_criss_cross():
    mesh = build_initial_mesh(catalog_shape("unit_square"))
    assert (mesh.n_vertices, mesh.n_cells) == (5, 4)
    assert np.allclose(sorted(map(tuple, mesh.vertices)), [(0, 0), (0, 1), (0.5, 0.5), (1, 0), (1, 1)])
    assert np.all(np.any(np.isclose(mesh.cell_points, 0.5).all(axis=2), axis=1))


def test_l_shape_six_cells():
    shape = catalog_shape("l_shape")
    mesh = build_initial_mesh(shape)
    assert mesh.n_cells == 6
    assert shape.area == pytest.approx(3.0)
    assert conformity_violations(mesh, 3.0) == []
    assert pairwise_violations(mesh) == []
    # every cell touches the reentrant corner
    assert np.all(np.any(np.all(mesh.cell_points == 0.0, axis=2), axis=1))


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_meshes_are_valid(name):
    shape = catalog_shape(name)
    mesh = build_initial_mesh(shape)
    assert conformity_violations(mesh, shape.area) == []
    assert pairwise_violations(mesh) == []
    assert set(mesh.boundary_tags) <= {"dirichlet", "neumann"}


@pytest.mark.parametrize("name", ["channel_4x1", "channel_10x1_obstacle"])
def test_channel_outflow_is_neumann(name):
    mesh = build_initial_mesh(catalog_shape(name))
    mids = mesh.vertices[mesh.boundary_edges].mean(axis=1)
    xmax = mesh.vertices[:, 0].max()
    assert np.array_equal(mesh.boundary_tags == "neumann", np.isclose(mids[:, 0], xmax))


def test_obstacle_has_two_loops():
    shape = catalog_shape("channel_10x1_obstacle")
    assert len(shape.loops) == 2
    assert shape.area == pytest.approx(10 - 0.4)
    mesh = build_initial_mesh(shape)
    c = mesh.centroids
    assert not np.any((c[:, 0] > 2) & (c[:, 0] < 4) & (c[:, 1] > 0.4) & (c[:, 1] < 0.6))


def test_custom_polygon():
    pts = [(0, 0), (2, 0), (2, 1), (1, 0.5), (0, 1)]
    shape = custom_polygon(pts)
    mesh = build_initial_mesh(shape)
    assert conformity_violations(mesh, shape.area) == []
    assert shape.area == pytest.approx(1.5)
    # clockwise input is reoriented
    assert custom_polygon(pts[::-1]).area == pytest.approx(1.5)


def test_self_intersecting_polygon_rejected():
    bow = [(0, 0), (1, 1), (1, 0), (0, 1)]
    assert not is_simple_polygon(bow)
    with pytest.raises(MeshError):
        build_initial_mesh(custom_polygon(bow))


def test_unknown_domain():
    with pytest.raises(ValueError):
        catalog_shape("circle")
