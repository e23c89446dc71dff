import numpy as np
import pytest
import scipy.sparse as sp

from nsdelta.assembly import LinearSystem, assemble_divergence, build_system
from nsdelta.domains import build_initial_mesh, catalog_shape
from nsdelta.mesh import refine, uniform_refine
from nsdelta.quadrature import edge_rule
from nsdelta.solver import (SingularSystemError, SolverConfig, nonlinear_residual, picard_solve,
                            solve_linear, solve_matrix, stokes_initial_guess)
from nsdelta.spaces import INFLOW, build_space, eval_field

CENTER = [((0.5, 0.5), (1.0, 1.0))]


def square_space(levels=1, family="taylor_hood"):
    return build_space(uniform_refine(build_initial_mesh(catalog_shape("unit_square")), levels), family)


def test_config_validation():
    for bad in (dict(tol=0.0), dict(tol=-1.0), dict(max_picard_iters=0), dict(linear_solver="gmres")):
        with pytest.raises(ValueError):
            SolverConfig(**bad)
    cfg = SolverConfig()
    assert (cfg.tol, cfg.max_picard_iters) == (1e-8, 50)


def test_identity_system():
    b = np.arange(5.0)
    assert np.array_equal(solve_matrix(sp.identity(5), b), b)


def test_random_spd_against_dense(rng):
    M = sp.random(50, 50, density=0.1, random_state=3)
    A = (M @ M.T + sp.identity(50) * 0.5).tocsc()
    b = rng.normal(size=50)
    assert np.allclose(solve_matrix(A, b), np.linalg.solve(A.toarray(), b), rtol=1e-10, atol=1e-12)


def test_singular_systems_report_block():
    s = square_space(0)
    sysm = build_system(s)
    M = sysm.matrix.tolil()
    p0 = s.n_velocity
    M[p0, :] = 0
    M[:, p0] = 0
    with pytest.raises(SingularSystemError, match="pressure"):
        solve_linear(LinearSystem(M.tocsr(), sysm.rhs, s, sysm.constrained))
    dense = np.ones((3, 3))
    with pytest.raises(SingularSystemError):
        solve_matrix(sp.csr_matrix(dense), np.ones(3))
    with pytest.raises(ValueError):
        solve_matrix(sp.identity(3), np.ones(4))


def test_stokes_zero_data_gives_zero():
    u, p = stokes_initial_guess(build_space(build_initial_mesh(catalog_shape("unit_square"))))
    assert np.all(u.coefficients == 0) and np.all(p.coefficients == 0)


def test_stokes_point_force_is_discretely_divergence_free():
    s = square_space(2)
    u, p = stokes_initial_guess(s, CENTER)
    assert np.abs(assemble_divergence(s) @ u.coefficients).max() <= 1e-10
    assert abs(p.coefficients @ np.bincount(s.mesh.cells.ravel(), np.repeat(s.mesh.areas / 3, 3))) < 1e-12


def _boundary_flux(u, x0):
    mesh = u.space.mesh
    t, w = edge_rule(5)
    total = 0.0
    for a, b in mesh.vertices[mesh.boundary_edges]:
        if np.isclose(a[0], x0) and np.isclose(b[0], x0):
            pts = a + t[:, None] * (b - a)
            total += np.linalg.norm(b - a) * sum(wi * eval_field(u, x)[0] for wi, x in zip(w, pts))
    return total


def test_inflow_channel_mass_conservation():
    mesh = build_initial_mesh(catalog_shape("channel_4x1"))
    s = build_space(refine(mesh, np.arange(mesh.n_cells)))
    u, p = stokes_initial_guess(s, CENTER, INFLOW)
    inflow, outflow = _boundary_flux(u, 0.0), _boundary_flux(u, 4.0)
    assert inflow == pytest.approx(1 / 6, rel=1e-12)
    assert outflow == pytest.approx(inflow, abs=1e-8)


def test_picard_zero_force_converges_immediately():
    (u, p), rep = picard_solve(square_space(0))
    assert rep.converged and rep.picard_iterations == 1
    assert np.all(u.coefficients == 0)


@pytest.mark.parametrize("family", ["taylor_hood", "mini"])
def test_picard_point_force(family):
    s = square_space(2, family)
    (u, p), rep = picard_solve(s, CENTER)
    assert rep.converged and rep.picard_iterations <= 50 and rep.final_increment <= 1e-8
    assert np.abs(assemble_divergence(s) @ u.coefficients).max() <= 1e-9
    assert nonlinear_residual(s, u, p, CENTER, multiplier=rep.multiplier) <= 10 * 1e-8


def test_picard_iterations_monotone_in_force():
    s = square_space(1)
    its = []
    for scale in (100.0, 10.0, 1.0):
        _, rep = picard_solve(s, [((0.5, 0.5), (scale, scale))])
        assert rep.converged
        its.append(rep.picard_iterations)
    assert its[0] >= its[1] >= its[2]


def test_huge_force_reports_failure():
    s = square_space(1)
    _, rep = picard_solve(s, [((0.5, 0.5), (1e6, 1e6))], config=SolverConfig(max_picard_iters=15))
    assert not rep.converged
    assert len(rep.increments) >= 1


def test_bc_override_matches_space_bc():
    mesh = build_initial_mesh(catalog_shape("channel_4x1"))
    (u1, _), _ = picard_solve(build_space(mesh), CENTER, bc=INFLOW)
    (u2, _), _ = picard_solve(build_space(mesh, bc=INFLOW), CENTER)
    assert np.allclose(u1.coefficients, u2.coefficients, atol=1e-14)
