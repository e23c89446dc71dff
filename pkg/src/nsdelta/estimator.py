"""Weighted residual error indicators for point-forced Navier-Stokes.

For a single source z with weight ``|x - z|^alpha`` the squared indicator of a
cell T is the sum of four terms::

    bulk  = h_T^2 D_T^alpha ||Lap u - (u.grad)u - (div u) u - grad p||^2_T
    div   = int_T |x - z|^alpha (div u)^2
    jump  = h_T D_T^alpha sum over interior edges S of T of ||[[(grad u - p I) nu]]||^2_S
    dirac = h_T^alpha |F|^2   if z lies in the closed cell T

With several sources, D_T becomes the minimum over the sources, the
divergence weight becomes rho (``|x - z|^alpha`` near each source, 1
elsewhere) and the Dirac term sums over the sources in the closed cell.
Each interior edge contributes to both of its cells; edges on the boundary,
including Neumann edges, carry no jump term.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from nsdelta.assembly import check_sources
from nsdelta.mesh import ancestor_map, cell_dirac_distances, cells_containing, locate_point
from nsdelta.quadrature import (ESTIMATOR_DEGREE, WeightSpec, check_alpha, edge_rule,
                                rule_for_degree, separation_distance, split_rule)
from nsdelta.spaces import DiscreteField, FunctionSpace

MODES = ("single", "multi")
TERMS = ("bulk", "div", "jump", "dirac")


@dataclass
class IndicatorReport:
    """Squared indicator terms per cell.

    ``total[T]`` is the squared indicator of cell T and
    ``global_estimator = sqrt(sum(total))``.
    """

    bulk: np.ndarray
    div: np.ndarray
    jump: np.ndarray
    dirac: np.ndarray
    h: np.ndarray
    D: np.ndarray
    alpha: float
    sources: list
    mode: str

    @property
    def total(self) -> np.ndarray:
        return self.bulk + self.div + self.jump + self.dirac

    @property
    def indicators(self) -> np.ndarray:
        """Unsquared per-cell indicators."""
        return np.sqrt(self.total)

    @property
    def global_estimator(self) -> float:
        return float(np.sqrt(self.total.sum()))

    def term_sums(self) -> dict:
        return {t: float(getattr(self, t).sum()) for t in TERMS}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_id", "h_T", "D_T", "term_bulk", "term_div", "term_jump", "term_dirac", "total"])
            total = self.total
            for c in range(len(total)):
                w.writerow([c] + [repr(float(a[c])) for a in
                                  (self.h, self.D, self.bulk, self.div, self.jump, self.dirac, total)])


# -- pointwise residuals ------------------------------------------------------

def _cell_residual(space, u, p, cells, lam):
    """Strong momentum residual (nc, nq, 2) and div u (nc, nq) at barycentric points."""
    vals, grads, lap = space.tabulate_velocity(cells, lam, hessians=True)
    _, pgrads = space.tabulate_pressure(cells, lam)
    U = space.local_velocity(u.coefficients, cells)       # (nc, 2, nb)
    P = space.local_pressure(p.coefficients, cells)       # (nc, 3)
    uq = np.einsum("cqb,cjb->cqj", vals, U)
    gu = np.einsum("cqbd,cjb->cqjd", grads, U)            # d_d u_j
    lapu = np.einsum("cqb,cjb->cqj", lap, U)
    gp = np.einsum("cqbd,cb->cqd", pgrads, P)
    div = gu[..., 0, 0] + gu[..., 1, 1]
    conv = np.einsum("cqd,cqjd->cqj", uq, gu)
    r = lapu - conv - div[..., None] * uq - gp
    return r, div


def _flux(space, u, p, cells, lam, normals):
    """(grad u - p I) n at barycentric points; ``normals`` is (nc, 2)."""
    vals, grads, _ = space.tabulate_velocity(cells, lam)
    pv, _ = space.tabulate_pressure(cells, lam)
    U = space.local_velocity(u.coefficients, cells)
    P = space.local_pressure(p.coefficients, cells)
    gu = np.einsum("cqbd,cjb->cqjd", grads, U)
    pq = np.einsum("cqb,cb->cq", pv, P)
    return np.einsum("cqjd,cd->cqj", gu, normals) - pq[..., None] * normals[:, None, :]


def bulk_residual(space: FunctionSpace, fields, cell: int):
    """Pointwise ``Lap u - (u.grad)u - (div u) u - grad p`` on ``cell``.

    Returns a function mapping (n, 2) points of the cell to (n, 2) values.
    """
    u, p = fields
    mesh = space.mesh

    def r(x):
        x = np.atleast_2d(np.asarray(x, float))
        lam = mesh.barycentric(np.full(len(x), cell), x)
        return _cell_residual(space, u, p, [cell], lam[None])[0][0]
    return r


def edge_jump(space: FunctionSpace, fields, edge: int, plus: int = 0):
    """Pointwise flux jump ``[[(grad u - p I) nu]]`` along an interior edge.

    ``nu`` on each side points into the cell it belongs to. ``plus`` picks
    which neighbour plays T+; the values do not depend on it.
    Returns a function mapping (n, 2) points of the edge to (n, 2) values.
    """
    u, p = fields
    mesh = space.mesh
    cells = mesh.edge_cells[edge]
    if cells[1] < 0:
        raise ValueError(f"edge {edge} lies on the boundary")
    if plus:
        cells = cells[::-1]
    n_out = mesh.edge_normals()[edge]
    if plus:
        n_out = -n_out

    def jump(x):
        x = np.atleast_2d(np.asarray(x, float))
        out = np.zeros((len(x), 2))
        for c, nu in ((cells[0], -n_out), (cells[1], n_out)):
            lam = mesh.barycentric(np.full(len(x), c), x)
            out += _flux(space, u, p, [c], lam[None], nu[None])[0]
        return out
    return jump


# -- indicators -------------------------------------------------------------

def _source_cells(mesh, points):
    """Cells whose closure contains a source, with the barycentric coordinates."""
    out = {}
    for z in points:
        for c in cells_containing(mesh, z):
            lam = mesh.barycentric(c, z)
            out.setdefault(int(c), []).append(np.clip(lam, 0.0, None) / np.clip(lam, 0.0, None).sum())
    return out


def _weighted_cell_integrals(mesh, cells, values_at, weight: WeightSpec, rule, special):
    """``int_T weight * values_at(...)`` for every cell.

    ``values_at(cells, lam)`` returns (len(cells), nq, ...) integrand values.
    Cells in ``special`` (cell -> source barycentrics) use the split rule.
    """
    out = None
    regular = np.array([c for c in cells if c not in special], dtype=np.int64)
    if len(regular):
        x = np.einsum("qk,ckd->cqd", rule.points, mesh.cell_points[regular])
        vals = values_at(regular, rule.points)
        wx = weight(x).reshape(x.shape[:2] + (1,) * (vals.ndim - 2))
        out_r = np.einsum("q,cq...->c...", rule.weights, wx * vals) * \
            mesh.areas[regular].reshape((-1,) + (1,) * (vals.ndim - 2))
        out = np.zeros((len(cells),) + out_r.shape[1:])
        out[np.searchsorted(cells, regular)] = out_r
    for c, lams in special.items():
        pts, w = split_rule(rule, np.array(lams))
        x = pts @ mesh.cell_points[c]
        vals = values_at(np.array([c]), pts[None])[0]
        wx = weight(x).reshape((-1,) + (1,) * (vals.ndim - 1))
        val = mesh.areas[c] * np.einsum("q,q...->...", w, wx * vals)
        if out is None:
            out = np.zeros((len(cells),) + np.shape(val))
        out[np.searchsorted(cells, c)] = val
    return out


def _jump_norms(space, u, p, rule_deg=11):
    """Squared L2 norm of the flux jump on every interior edge."""
    mesh = space.mesh
    edges = np.flatnonzero(mesh.interior_edges)
    if len(edges) == 0:
        return edges, np.zeros(0)
    t, w = edge_rule(rule_deg)
    ends = mesh.vertices[mesh.edges[edges]]
    x = ends[:, None, 0, :] + t[None, :, None] * (ends[:, None, 1, :] - ends[:, None, 0, :])
    n_out = mesh.edge_normals()[edges]
    J = np.zeros(x.shape)
    for side, sign in ((0, -1.0), (1, 1.0)):
        cells = mesh.edge_cells[edges, side]
        lam = mesh.barycentric(np.repeat(cells, len(t)), x.reshape(-1, 2)).reshape(len(edges), len(t), 3)
        J += _flux(space, u, p, cells, lam, sign * n_out)
    L = mesh.edge_lengths[edges]
    return edges, L * np.einsum("g,egj->e", w, J * J)


def compute_indicators(space: FunctionSpace, fields, sources, alpha: float, mode: str | None = None,
                       degree: int = ESTIMATOR_DEGREE) -> IndicatorReport:
    """Per-cell squared indicator terms of a discrete solution ``fields = (u, p)``.

    ``mode`` defaults to ``"single"`` for one source and ``"multi"`` otherwise.
    """
    alpha = check_alpha(alpha)
    u, p = fields
    mesh = space.mesh
    sources = check_sources(space, sources)
    if not sources:
        raise ValueError("at least one source is required")
    mode = mode or ("single" if len(sources) == 1 else "multi")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "single" and len(sources) != 1:
        raise ValueError("single-source indicators need exactly one source")
    Z = np.array([z for z, _ in sources])
    if mode == "single":
        weight = WeightSpec(alpha, Z)
    else:
        weight = WeightSpec(alpha, Z, separation_distance(mesh, Z))
    rule = rule_for_degree(degree)
    cells = np.arange(mesh.n_cells)
    h = mesh.diameters
    D = cell_dirac_distances(mesh, Z)

    r, div = _cell_residual(space, u, p, cells, rule.points)
    bulk = h ** 2 * D ** alpha * mesh.areas * np.einsum("q,cq->c", rule.weights, np.einsum("cqj,cqj->cq", r, r))

    def div_sq(cs, lam):
        if lam is rule.points:  # regular cells reuse the values computed above
            return div[cs] ** 2
        return _cell_residual(space, u, p, cs, lam)[1] ** 2
    special = _source_cells(mesh, Z)
    divt = _weighted_cell_integrals(mesh, cells, div_sq, weight, rule, special)

    edges, jn = _jump_norms(space, u, p)
    jsum = np.zeros(mesh.n_cells)
    if len(edges):
        np.add.at(jsum, mesh.edge_cells[edges, 0], jn)
        np.add.at(jsum, mesh.edge_cells[edges, 1], jn)
    jump = h * D ** alpha * jsum

    dirac = np.zeros(mesh.n_cells)
    for z, F in sources:
        c = cells_containing(mesh, z)
        dirac[c] += h[c] ** alpha * float(F @ F)
    return IndicatorReport(bulk, divt, jump, dirac, h, D, alpha, sources, mode)


# -- reference errors -----------------------------------------------------------

def reference_error(fields_coarse, fields_fine, alpha: float, sources,
                    degree: int = ESTIMATOR_DEGREE):
    """Weighted errors of coarse fields against fields on a nested refinement.

    Returns ``(||grad(u_f - u_c)||, ||p_f - p_c||)`` in the weighted L2 norm
    (``|x - z|^alpha`` for one source, rho for several), integrated on the
    fine mesh with the coarse fields evaluated through the cell genealogy.
    """
    uc, pc = fields_coarse
    uf, pf = fields_fine
    sc, sf = uc.space, uf.space
    anc = ancestor_map(sf.mesh, sc.mesh)
    Z = np.array([np.asarray(z, float) for z, _ in sources]).reshape(-1, 2)
    weight = WeightSpec.for_mesh(sf.mesh, alpha, Z) if len(Z) > 1 else WeightSpec(alpha, Z)
    rule = rule_for_degree(degree)
    fmesh, cmesh = sf.mesh, sc.mesh

    def err(cells, lam):
        lam = np.broadcast_to(lam, (len(cells),) + np.shape(lam)[-2:]) if np.ndim(lam) == 2 else lam
        x = np.einsum("cqk,ckd->cqd", lam, fmesh.cell_points[cells])
        ac = anc[cells]
        lam_c = cmesh.barycentric(np.repeat(ac, x.shape[1]), x.reshape(-1, 2)).reshape(lam.shape)
        gf = _grad_and_pressure(sf, uf, pf, cells, lam)
        gc = _grad_and_pressure(sc, uc, pc, ac, lam_c)
        du = gf[0] - gc[0]
        dp = gf[1] - gc[1]
        return np.stack([np.einsum("cqjd,cqjd->cq", du, du), dp * dp], axis=-1)

    cells = np.arange(fmesh.n_cells)
    special = _source_cells(fmesh, Z)
    e = _weighted_cell_integrals(fmesh, cells, err, weight, rule, special).sum(axis=0)
    return float(np.sqrt(e[0])), float(np.sqrt(e[1]))


def _grad_and_pressure(space, u, p, cells, lam):
    _, grads, _ = space.tabulate_velocity(cells, lam)
    pv, _ = space.tabulate_pressure(cells, lam)
    gu = np.einsum("cqbd,cjb->cqjd", grads, space.local_velocity(u.coefficients, cells))
    pq = np.einsum("cqb,cb->cq", pv, space.local_pressure(p.coefficients, cells))
    return gu, pq


# -- Galerkin identity ----------------------------------------------------------

def residual_functional(space: FunctionSpace, fields, sources=(), body_force=None,
                        degree: int = ESTIMATOR_DEGREE) -> np.ndarray:
    """Integrated-by-parts residual applied to every velocity basis function.

    Sums, for each basis function v, the point force ``F . v(z)``, the
    cellwise integrals of the strong residual (plus any smooth force) against
    v, the flux jumps against v on interior edges, and on Neumann edges the
    boundary flux ``-((grad u - p I) n - (u.n) u) . v``. For a discrete
    solution this equals the algebraic momentum residual.
    """
    u, p = fields
    mesh = space.mesh
    nb = space.n_local
    rhs = np.zeros(space.n_velocity)
    dm = space.velocity_dofmap

    def scatter(cells, local):  # local (nc, 2, nb)
        np.add.at(rhs, dm[cells].ravel(), local.reshape(len(cells), -1).ravel())

    for z, F in check_sources(space, sources):
        c = locate_point(mesh, z)
        vals, _, _ = space.tabulate_velocity([c], mesh.barycentric(c, z)[None])
        scatter(np.array([c]), np.einsum("j,b->jb", F, vals[0, 0])[None])

    rule = rule_for_degree(degree)
    cells = np.arange(mesh.n_cells)
    r, _ = _cell_residual(space, u, p, cells, rule.points)
    if body_force is not None:
        x = np.einsum("qk,ckd->cqd", rule.points, mesh.cell_points)
        r = r + np.asarray(body_force(x.reshape(-1, 2)), float).reshape(r.shape)
    vals, _, _ = space.tabulate_velocity(cells, rule.points)
    scatter(cells, np.einsum("q,cqj,cqb->cjb", rule.weights, r, vals) * mesh.areas[:, None, None])

    t, w = edge_rule(11)

    def edge_terms(edges, sides):
        ends = mesh.vertices[mesh.edges[edges]]
        x = ends[:, None, 0, :] + t[None, :, None] * (ends[:, None, 1, :] - ends[:, None, 0, :])
        lam_by_side = {}
        for s in sides:
            cs = mesh.edge_cells[edges, s]
            lam_by_side[s] = mesh.barycentric(np.repeat(cs, len(t)), x.reshape(-1, 2)).reshape(len(edges), len(t), 3)
        return x, lam_by_side

    edges = np.flatnonzero(mesh.interior_edges)
    if len(edges):
        n_out = mesh.edge_normals()[edges]
        _, lams = edge_terms(edges, (0, 1))
        J = sum(_flux(space, u, p, mesh.edge_cells[edges, s], lams[s], sg * n_out)
                for s, sg in ((0, -1.0), (1, 1.0)))
        L = mesh.edge_lengths[edges]
        # test functions are continuous, so their traces from side 0 suffice
        cs = mesh.edge_cells[edges, 0]
        v, _, _ = space.tabulate_velocity(cs, lams[0])
        scatter(cs, np.einsum("g,egj,egb->ejb", w, J, v) * L[:, None, None])

    neu = mesh.boundary_edge_ids[mesh.boundary_tags == "neumann"]
    if len(neu):
        n_out = mesh.edge_normals()[neu]
        _, lams = edge_terms(neu, (0,))
        cs = mesh.edge_cells[neu, 0]
        flux = _flux(space, u, p, cs, lams[0], n_out)
        v, _, _ = space.tabulate_velocity(cs, lams[0])
        uq = np.einsum("egb,ejb->egj", v, space.local_velocity(u.coefficients, cs))
        un = np.einsum("egj,ej->eg", uq, n_out)
        g = flux - un[..., None] * uq
        L = mesh.edge_lengths[neu]
        scatter(cs, -np.einsum("g,egj,egb->ejb", w, g, v) * L[:, None, None])
    return rhs


def galerkin_defect(space: FunctionSpace, fields, sources=(), body_force=None) -> float:
    """Max over free velocity basis functions of the residual functional."""
    r = residual_functional(space, fields, sources, body_force)
    free = np.ones(space.n_velocity, bool)
    free[space.dirichlet_dofs] = False
    return float(np.abs(r[free]).max(initial=0.0))
