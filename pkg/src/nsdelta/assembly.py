"""Sparse operators and right-hand sides of the discrete Navier-Stokes problem.

Forms (viscosity one)::

    a(u, v)    =  int grad u : grad v
    b(v, q)    = -int q div v
    c(u, w; v) = -int u_j w_k d_k v_j

The Picard step uses ``c(w, u; v)`` with the previous iterate ``w`` in the
first slot, so the convection matrix is
``N(w)[(j, a), (m, b)] = -int w_j phi_b d_m phi_a``.

The saddle-point matrix is::

    [ A + N(w)   B^T   0 ]
    [ B          0     m ]
    [ 0          m^T   0 ]

where ``m`` holds the integrals of the pressure basis and enforces a
mean-zero pressure. The last row/column is present only when no boundary
edge is tagged ``neumann``. Dirichlet velocity rows are replaced by
identity rows carrying the boundary values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from nsdelta.mesh import locate_point
from nsdelta.quadrature import ESTIMATOR_DEGREE, boundary_distance, rule_for_degree
from nsdelta.spaces import DiscreteField, FunctionSpace

# polynomial degree of each integrand, so the rules below are exact
_DEGREES = {
    "taylor_hood": {"diffusion": 2, "divergence": 2, "convection": 5},
    "mini": {"diffusion": 4, "divergence": 3, "convection": 8},
}


def _canonical_csr(rows, cols, vals, shape) -> sp.csr_matrix:
    """Sum duplicate triplets after a stable sort by (row, col).

    The result is reproducible for a fixed input order and agrees with any
    permutation of the triplets up to rounding in the duplicate sums.
    """
    rows = np.asarray(rows, np.int64).ravel()
    cols = np.asarray(cols, np.int64).ravel()
    vals = np.asarray(vals, float).ravel()
    key = rows * shape[1] + cols
    order = np.argsort(key, kind="stable")
    key, vals = key[order], vals[order]
    start = np.ones(len(key), dtype=bool)
    start[1:] = key[1:] != key[:-1]
    idx = np.flatnonzero(start)
    summed = np.add.reduceat(vals, idx) if len(idx) else vals
    r, c = np.divmod(key[idx], shape[1])
    return sp.csr_matrix((summed, (r, c)), shape=shape)


def _canonical_sum(index, vals, n) -> np.ndarray:
    """Order-independent ``np.add.at`` into a vector of length ``n``."""
    index = np.asarray(index, np.int64).ravel()
    return _canonical_csr(index, np.zeros_like(index), vals, (n, 1)).toarray().ravel()


def _scatter(row_map, col_map, local, shape):
    nr, nc = row_map.shape[1], col_map.shape[1]
    rows = np.broadcast_to(row_map[:, :, None], (len(row_map), nr, nc))
    cols = np.broadcast_to(col_map[:, None, :], (len(col_map), nr, nc))
    return _canonical_csr(rows, cols, local, shape)


def _rule(space, kind, degree=None):
    return rule_for_degree(degree or _DEGREES[space.family][kind])


def assemble_diffusion(space: FunctionSpace, degree: int | None = None) -> sp.csr_matrix:
    """Vector Laplacian block ``A`` (velocity x velocity)."""
    mesh = space.mesh
    rule = _rule(space, "diffusion", degree)
    cells = np.arange(mesh.n_cells)
    _, grads, _ = space.tabulate_velocity(cells, rule.points)
    K = np.einsum("q,cqad,cqbd->cab", rule.weights, grads, grads) * mesh.areas[:, None, None]
    nb = space.n_local
    local = np.zeros((mesh.n_cells, 2 * nb, 2 * nb))
    local[:, :nb, :nb] = K
    local[:, nb:, nb:] = K
    dm = space.velocity_dofmap
    return _scatter(dm, dm, local, (space.n_velocity, space.n_velocity))


def assemble_divergence(space: FunctionSpace, degree: int | None = None) -> sp.csr_matrix:
    """``B[i, (m, b)] = -int psi_i d_m phi_b`` (pressure x velocity)."""
    mesh = space.mesh
    rule = _rule(space, "divergence", degree)
    cells = np.arange(mesh.n_cells)
    _, grads, _ = space.tabulate_velocity(cells, rule.points)
    psi, _ = space.tabulate_pressure(cells, rule.points)
    local = -np.einsum("q,cqi,cqbm->cimb", rule.weights, psi, grads) * mesh.areas[:, None, None, None]
    local = local.reshape(mesh.n_cells, 3, 2 * space.n_local)
    return _scatter(space.pressure_dofmap, space.velocity_dofmap, local,
                    (space.n_pressure, space.n_velocity))


def assemble_convection(space: FunctionSpace, w: DiscreteField, degree: int | None = None) -> sp.csr_matrix:
    """Picard convection matrix ``N(w)`` for the lagged velocity ``w``."""
    if w.space is not space and (w.space.mesh is not space.mesh or w.space.family != space.family):
        raise ValueError("convecting field lives on a different space")
    if w.kind != "velocity":
        raise ValueError("convecting field must be a velocity")
    mesh = space.mesh
    rule = _rule(space, "convection", degree)
    cells = np.arange(mesh.n_cells)
    vals, grads, _ = space.tabulate_velocity(cells, rule.points)
    W = np.einsum("cqb,cjb->cqj", vals, space.local_velocity(w.coefficients, cells))
    local = -np.einsum("q,cqj,cqb,cqam->cjamb", rule.weights, W, vals, grads)
    local *= mesh.areas[:, None, None, None, None]
    nb = space.n_local
    local = local.reshape(mesh.n_cells, 2 * nb, 2 * nb)
    dm = space.velocity_dofmap
    return _scatter(dm, dm, local, (space.n_velocity, space.n_velocity))


def check_sources(space: FunctionSpace, sources):
    """Normalise ``[(z, F), ...]`` and reject points on or outside the boundary."""
    mesh = space.mesh
    out = []
    for z, F in sources:
        z = np.asarray(z, float).reshape(2)
        F = np.asarray(F, float).reshape(2)
        locate_point(mesh, z)
        scale = float(np.ptp(mesh.vertices, axis=0).max())
        if boundary_distance(mesh, z)[0] <= 1e-12 * scale:
            raise ValueError(f"source point {tuple(z)} lies on the boundary")
        out.append((z, F))
    return out


def assemble_dirac_rhs(space: FunctionSpace, sources) -> np.ndarray:
    """``rhs[(j, a)] = sum_z F_j phi_a(z)``."""
    rhs = np.zeros(space.n_velocity)
    for z, F in check_sources(space, sources):
        cell = locate_point(space.mesh, z)
        lam = space.mesh.barycentric(cell, z)
        vals, _, _ = space.tabulate_velocity([cell], lam[None, :])
        phi = vals[0, 0]
        dofs = space.velocity_dofmap[cell]
        nb = space.n_local
        np.add.at(rhs, dofs[:nb], F[0] * phi)
        np.add.at(rhs, dofs[nb:], F[1] * phi)
    return rhs


def assemble_body_force(space: FunctionSpace, f, degree: int = ESTIMATOR_DEGREE) -> np.ndarray:
    """``rhs[(j, a)] = int f_j phi_a`` for a smooth force ``f`` ((n, 2) -> (n, 2))."""
    mesh = space.mesh
    rule = rule_for_degree(degree)
    cells = np.arange(mesh.n_cells)
    vals, _, _ = space.tabulate_velocity(cells, rule.points)
    x = np.einsum("qk,ckd->cqd", rule.points, mesh.cell_points)
    fx = np.asarray(f(x.reshape(-1, 2)), float).reshape(mesh.n_cells, len(rule), 2)
    local = np.einsum("q,cqb,cqj->cjb", rule.weights, vals, fx) * mesh.areas[:, None, None]
    return _canonical_sum(space.velocity_dofmap, local.reshape(mesh.n_cells, -1), space.n_velocity)


def pressure_mean_vector(space: FunctionSpace) -> np.ndarray:
    """Integrals of the pressure basis functions."""
    mesh = space.mesh
    return _canonical_sum(mesh.cells, np.repeat(mesh.areas / 3.0, 3), space.n_pressure)


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    space: FunctionSpace
    constrained: np.ndarray  # Dirichlet rows

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def momentum_rhs(space, sources=(), body_force=None) -> np.ndarray:
    f = assemble_dirac_rhs(space, sources) if len(sources) else np.zeros(space.n_velocity)
    if body_force is not None:
        f = f + assemble_body_force(space, body_force)
    return f


def saddle_point_matrix(space, w=None, A=None, B=None) -> sp.csr_matrix:
    """Unconstrained block matrix (Dirichlet rows not yet replaced)."""
    A = assemble_diffusion(space) if A is None else A
    B = assemble_divergence(space) if B is None else B
    K = A if w is None else A + assemble_convection(space, w)
    if space.has_mean_constraint:
        m = sp.csr_matrix(pressure_mean_vector(space)[:, None])
        blocks = [[K, B.T, None], [B, None, m], [None, m.T, None]]
    else:
        blocks = [[K, B.T], [B, None]]
    return sp.bmat(blocks, format="csr")


def apply_dirichlet(matrix: sp.csr_matrix, rhs, dofs, values):
    """Replace rows ``dofs`` with identity rows and ``rhs[dofs] = values``."""
    n = matrix.shape[0]
    keep = np.ones(n)
    keep[dofs] = 0.0
    ident = np.zeros(n)
    ident[dofs] = 1.0
    matrix = (sp.diags(keep) @ matrix + sp.diags(ident)).tocsr()
    matrix.eliminate_zeros()
    rhs = np.array(rhs, float, copy=True)
    rhs[dofs] = values
    return matrix, rhs


def build_system(space: FunctionSpace, w: DiscreteField | None = None, sources=(),
                 body_force=None, A=None, B=None, f=None) -> LinearSystem:
    """Linear saddle-point system of one Picard step (``w=None``: Stokes).

    ``A``, ``B`` and ``f`` may be passed in to reuse assembled pieces.
    """
    M = saddle_point_matrix(space, w, A, B)
    if f is None:
        f = momentum_rhs(space, sources, body_force)
    rhs = np.zeros(M.shape[0])
    rhs[:space.n_velocity] = f
    M, rhs = apply_dirichlet(M, rhs, space.dirichlet_dofs, space.dirichlet_values)
    return LinearSystem(M, rhs, space, space.dirichlet_dofs)


def momentum_residual(space, u: DiscreteField, p: DiscreteField, sources=(), body_force=None) -> np.ndarray:
    """``F(v) - a(u, v) - b(v, p) - c(u, u; v)`` for every velocity basis function."""
    A = assemble_diffusion(space)
    B = assemble_divergence(space)
    N = assemble_convection(space, u)
    f = momentum_rhs(space, sources, body_force)
    return f - (A + N) @ u.coefficients - B.T @ p.coefficients
