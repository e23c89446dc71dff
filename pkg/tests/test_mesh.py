import numpy as np
import pytest
from hypothesis import given, strategies as st

from nsdelta.domains import CATALOG, build_initial_mesh, catalog_shape, mesh_from_cells
from nsdelta.mesh import (Mesh, MeshError, ancestor_map, cell_diameter, cell_dirac_distances,
                          cells_containing, conformity_violations, dirac_distance,
                          dirac_distance_multi, locate_point, locate_points, pairwise_violations,
                          read_mesh, refine, uniform_refine, write_mesh)

FOUR = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]


def equilateral():
    return mesh_from_cells([(0, 0), (1, 0), (0.5, np.sqrt(3) / 2)], [(0, 1, 2)])


def test_diameter_examples(reference_triangle):
    assert cell_diameter(reference_triangle, 0) == pytest.approx(np.sqrt(2), rel=1e-15)
    assert cell_diameter(equilateral(), 0) == pytest.approx(1.0, rel=1e-15)


def test_dirac_distance_examples(reference_triangle):
    assert dirac_distance(reference_triangle, 0, (0, 0)) == pytest.approx(1.0)
    assert dirac_distance(reference_triangle, 0, (2, 2)) == pytest.approx(2 * np.sqrt(2))
    eq = equilateral()
    assert dirac_distance(eq, 0, eq.centroids[0]) == pytest.approx(1 / np.sqrt(3), rel=1e-14)


def test_dirac_distance_against_dense_sampling(reference_triangle, rng):
    lam = rng.dirichlet(np.ones(3), 20000)
    lam = np.vstack([lam, np.eye(3)])
    x = lam @ reference_triangle.cell_points[0]
    for z in [(2, 2), (-0.3, 0.4), (0.2, 0.2)]:
        sampled = np.linalg.norm(x - np.asarray(z), axis=1).max()
        assert dirac_distance(reference_triangle, 0, z) == pytest.approx(sampled, rel=1e-14)


def test_dirac_distance_multi(square):
    for c in range(square.n_cells):
        assert dirac_distance_multi(square, c, [(0.3, 0.4)]) == dirac_distance(square, c, (0.3, 0.4))
    near = mesh_from_cells([(0, 0), (0.1, 0), (0, 0.1)], [(0, 1, 2)])
    assert dirac_distance_multi(near, 0, [(0, 0), (10, 10)]) == pytest.approx(0.1)
    # vertex enumeration oracle for the four-source set
    P = square.cell_points
    oracle = [min(max(np.hypot(*(v - np.array(z))) for v in P[c]) for z in FOUR) for c in range(4)]
    assert np.allclose(cell_dirac_distances(square, FOUR), oracle, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        dirac_distance_multi(square, 0, np.zeros((0, 2)))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_dirac_distance_bounds_diameter(zx, zy):
    mesh = mesh_from_cells([(0, 0), (1, 0.2), (0.3, 0.9)], [(0, 1, 2)])
    D = dirac_distance(mesh, 0, (zx, zy))
    assert D == pytest.approx(np.linalg.norm(mesh.cell_points[0] - (zx, zy), axis=1).max())
    if len(cells_containing(mesh, (zx, zy))):
        assert mesh.diameters[0] <= 2 * D + 1e-14


def test_two_triangle_refinement_closure(two_triangles):
    fine = refine(two_triangles, [0])
    assert (fine.n_cells, fine.n_vertices) == (4, 5)
    assert conformity_violations(fine, 1.0) == []
    assert pairwise_violations(fine) == []


def test_empty_marking_is_identity(square):
    same = refine(square, [])
    assert np.array_equal(same.cells, square.cells) and np.array_equal(same.vertices, square.vertices)
    assert np.array_equal(ancestor_map(same, square), np.arange(4))


def test_mark_all_bisects_every_cell(square):
    fine = refine(square, np.arange(square.n_cells))
    counts = np.bincount(ancestor_map(fine, square), minlength=4)
    assert np.all(counts >= 2)
    assert fine.min_angles().min() >= 0.5 * square.min_angles().min() - 1e-14


def test_refine_rejects_bad_index(square):
    with pytest.raises(MeshError):
        refine(square, [7])


def test_locate_point_examples(square):
    assert locate_point(square, (0.5, 0.5)) in range(4)
    assert len(cells_containing(square, (0.5, 0.5))) == 4
    c = locate_point(square, (0.25, 0.1))
    lam = square.barycentric(c, np.array([0.25, 0.1]))
    assert lam.min() > 0
    assert np.allclose(np.sort(square.cell_points[c][:, 1]), [0, 0, 0.5])
    with pytest.raises(MeshError):
        locate_point(square, (2, 2))


def test_locate_points_matches_scalar(rng):
    mesh = uniform_refine(build_initial_mesh(catalog_shape("l_shape")), 2)
    pts = rng.uniform(-1, 1, (200, 2))
    pts = pts[~((pts[:, 0] > 0) & (pts[:, 1] < 0))]
    found = locate_points(mesh, pts)
    lam = mesh.barycentric(found, pts)
    assert lam.min() >= -1e-12


def test_edge_normals_and_structure(square):
    n = square.edge_normals()
    assert np.allclose(np.linalg.norm(n, axis=1), 1.0)
    out = np.einsum("ij,ij->i", square.vertices[square.edges].mean(axis=1)
                    - square.centroids[square.edge_cells[:, 0]], n)
    assert np.all(out > 0)
    assert square.n_edges == 8 and square.interior_edges.sum() == 4


def test_mesh_rejects_inverted_cell():
    with pytest.raises(MeshError):
        Mesh([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)], [(0, 1), (1, 2), (0, 2)], ["dirichlet"] * 3)


def test_mesh_rejects_bad_tag():
    with pytest.raises((MeshError, ValueError)):
        Mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)], [(0, 1), (1, 2), (0, 2)], ["dirichlet", "robin", "dirichlet"])


def test_write_read_round_trip(tmp_path, rng):
    mesh = build_initial_mesh(catalog_shape("channel_4x1"))
    mesh = refine(mesh, rng.choice(mesh.n_cells, 5, replace=False))
    path = tmp_path / "m.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.cells, mesh.cells)
    assert np.array_equal(back.boundary_edges, mesh.boundary_edges)
    assert list(back.boundary_tags) == list(mesh.boundary_tags)
    assert open(path).readline().split() == [str(mesh.n_vertices), str(mesh.n_cells),
                                             str(len(mesh.boundary_edges))]


def test_read_mesh_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("3 1 3\n0 0\n1 0\n")
    with pytest.raises(MeshError):
        read_mesh(p)


@pytest.mark.parametrize("name", CATALOG)
@given(data=st.data())
def test_random_refinement_keeps_invariants(name, data):
    shape = catalog_shape(name)
    mesh = build_initial_mesh(shape)
    theta0 = mesh.min_angles().min()
    for _ in range(data.draw(st.integers(1, 5))):
        k = data.draw(st.integers(1, max(1, mesh.n_cells // 3)))
        marked = data.draw(st.lists(st.integers(0, mesh.n_cells - 1), min_size=1, max_size=k))
        fine = refine(mesh, marked)
        assert conformity_violations(fine, shape.area) == []
        assert fine.min_angles().min() >= 0.5 * theta0 - 1e-12
        # monotone: each child lies inside its parent
        anc = ancestor_map(fine, mesh)
        lam = mesh.barycentric(np.repeat(anc, 3), fine.cell_points.reshape(-1, 2))
        assert lam.min() >= -1e-12
        assert np.allclose(np.bincount(anc, fine.areas, mesh.n_cells), mesh.areas, rtol=1e-12, atol=0)
        # marked cells were bisected
        assert np.all(np.bincount(anc, minlength=mesh.n_cells)[marked] >= 2)
        mesh = fine
    assert pairwise_violations(mesh) == []


def test_boundary_tags_inherited():
    mesh = build_initial_mesh(catalog_shape("channel_4x1"))
    fine = uniform_refine(mesh, 1)
    mids = fine.vertices[fine.boundary_edges].mean(axis=1)
    neumann = fine.boundary_tags == "neumann"
    assert np.all(np.isclose(mids[neumann, 0], 4.0))
    assert not np.any(np.isclose(mids[~neumann, 0], 4.0) & (mids[~neumann, 1] > 0) & (mids[~neumann, 1] < 1))


def test_ancestor_map_rejects_unrelated(square, two_triangles):
    with pytest.raises(MeshError):
        ancestor_map(refine(square, [0]), two_triangles)


def test_pairwise_detects_hanging_node_and_overlap():
    verts = [(0, 0), (2, 0), (1, 1), (0, 2), (2, 2)]
    hanging = Mesh(verts, [(0, 1, 2), (0, 2, 3), (1, 4, 3)],
                   [(0, 1), (1, 4), (4, 3), (3, 0), (1, 3)], ["dirichlet"] * 5, validate=False)
    assert pairwise_violations(hanging)
    assert conformity_violations(hanging)
    overlap = Mesh([(0, 0), (1, 0), (0, 1), (0.2, 0.2), (1.2, 0.2), (0.2, 1.2)],
                   [(0, 1, 2), (3, 4, 5)], [], [], validate=False)
    assert pairwise_violations(overlap) == [(0, 1)]
