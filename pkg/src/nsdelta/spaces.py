"""Taylor-Hood (P2/P1) and mini (P1+bubble/P1) finite element spaces.

Reference bases are written as functions of the barycentric coordinates,
so physical gradients and Hessians follow from the (constant) barycentric
gradients of each cell by the chain rule.

Velocity dofs are numbered component-major: the x-components of all scalar
nodes come first, then the y-components. Scalar nodes are the vertices
followed by the edges (Taylor-Hood) or the cells (mini bubbles). Pressure
dofs are the vertices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from nsdelta.mesh import Mesh, locate_point

FAMILIES = ("taylor_hood", "mini")

_BARY_TOL = 1e-12


# -- reference bases (functions of lambda) ----------------------------------

def p1_basis(lam):
    """Values, first and second lambda-derivatives of the P1 basis."""
    lam = np.asarray(lam, float)
    shape = lam.shape[:-1]
    d1 = np.broadcast_to(np.eye(3), shape + (3, 3))
    d2 = np.zeros(shape + (3, 3, 3))
    return lam, d1, d2


_EDGE_PAIRS = ((1, 2), (2, 0), (0, 1))


def p2_basis(lam):
    lam = np.asarray(lam, float)
    shape = lam.shape[:-1]
    vals = np.empty(shape + (6,))
    d1 = np.zeros(shape + (6, 3))
    d2 = np.zeros(shape + (6, 3, 3))
    for i in range(3):
        vals[..., i] = lam[..., i] * (2.0 * lam[..., i] - 1.0)
        d1[..., i, i] = 4.0 * lam[..., i] - 1.0
        d2[..., i, i, i] = 4.0
    for k, (j, m) in enumerate(_EDGE_PAIRS):
        vals[..., 3 + k] = 4.0 * lam[..., j] * lam[..., m]
        d1[..., 3 + k, j] = 4.0 * lam[..., m]
        d1[..., 3 + k, m] = 4.0 * lam[..., j]
        d2[..., 3 + k, j, m] = 4.0
        d2[..., 3 + k, m, j] = 4.0
    return vals, d1, d2


def bubble_basis(lam):
    """Unscaled cubic bubble lambda0 * lambda1 * lambda2."""
    lam = np.asarray(lam, float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    vals = (l0 * l1 * l2)[..., None]
    d1 = np.stack([l1 * l2, l0 * l2, l0 * l1], axis=-1)[..., None, :]
    z = np.zeros_like(l0)
    d2 = np.stack([
        np.stack([z, l2, l1], axis=-1),
        np.stack([l2, z, l0], axis=-1),
        np.stack([l1, l0, z], axis=-1),
    ], axis=-2)[..., None, :, :]
    return vals, d1, d2


def mini_basis(lam):
    a = p1_basis(lam)
    b = bubble_basis(lam)
    return tuple(np.concatenate([x, y], axis=-1 - k) for k, (x, y) in enumerate(zip(a, b)))


def velocity_reference(family, lam):
    if family == "taylor_hood":
        return p2_basis(lam)
    if family == "mini":
        return mini_basis(lam)
    raise ValueError(f"unknown element family {family!r}")


# -- spaces ----------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet data on the ``dirichlet``-tagged edges.

    ``value`` maps an (n, 2) array of points to (n, 2) velocities; ``None``
    means homogeneous. ``neumann`` edges carry the do-nothing condition.
    """

    value: Callable | None = None

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, float).reshape(-1, 2)
        if self.value is None:
            return np.zeros_like(points)
        return np.asarray(self.value(points), float).reshape(-1, 2)


HOMOGENEOUS = BoundaryCondition()


def parabolic_inflow(points):
    """(y(1 - y), 0) on the inflow segment x = 0, zero elsewhere."""
    x, y = points[:, 0], points[:, 1]
    ux = np.where(np.abs(x) <= 1e-12, y * (1.0 - y), 0.0)
    return np.stack([ux, np.zeros_like(ux)], axis=1)


INFLOW = BoundaryCondition(parabolic_inflow)


class FunctionSpace:
    """Velocity/pressure pair over a mesh, with Dirichlet constraints."""

    def __init__(self, mesh: Mesh, family: str = "taylor_hood", bc: BoundaryCondition = HOMOGENEOUS):
        if family not in FAMILIES:
            raise ValueError(f"unknown element family {family!r}; expected one of {FAMILIES}")
        self.mesh = mesh
        self.family = family
        self.bc = bc
        nv, nc = mesh.n_vertices, mesh.n_cells
        if family == "taylor_hood":
            self.velocity_nodes = np.hstack([mesh.cells, nv + mesh.cell_edges])
            mids = mesh.vertices[mesh.edges].mean(axis=1)
            self.node_coords = np.vstack([mesh.vertices, mids])
        else:
            self.velocity_nodes = np.hstack([mesh.cells, nv + np.arange(nc)[:, None]])
            self.node_coords = np.vstack([mesh.vertices, mesh.centroids])
        self.n_scalar = len(self.node_coords)
        self.n_local = self.velocity_nodes.shape[1]
        self.velocity_dofmap = np.hstack([self.velocity_nodes, self.n_scalar + self.velocity_nodes])
        self.pressure_dofmap = mesh.cells
        self.n_velocity = 2 * self.n_scalar
        self.n_pressure = nv
        self.has_mean_constraint = not np.any(mesh.boundary_tags == "neumann")
        self._setup_dirichlet()

    def _setup_dirichlet(self):
        mesh = self.mesh
        dir_edges = mesh.boundary_edge_ids[mesh.boundary_tags == "dirichlet"]
        nodes = [mesh.edges[dir_edges].ravel()]
        if self.family == "taylor_hood":
            nodes.append(mesh.n_vertices + dir_edges)
        nodes = np.unique(np.concatenate(nodes)) if len(dir_edges) else np.zeros(0, np.int64)
        vals = self.bc.evaluate(self.node_coords[nodes])
        self.dirichlet_nodes = nodes
        self.dirichlet_dofs = np.concatenate([nodes, self.n_scalar + nodes])
        self.dirichlet_values = np.concatenate([vals[:, 0], vals[:, 1]])

    @property
    def ndof(self) -> int:
        """dim V + dim P, counted before constraints."""
        return self.n_velocity + self.n_pressure

    @property
    def system_size(self) -> int:
        return self.n_velocity + self.n_pressure + int(self.has_mean_constraint)

    def __repr__(self):
        return (f"FunctionSpace({self.family}, {self.n_velocity} velocity dofs, "
                f"{self.n_pressure} pressure dofs)")

    # -- tabulation ---------------------------------------------------------
    def tabulate_velocity(self, cells, lam, hessians=False):
        """Physical velocity basis at barycentric points.

        ``lam`` is (nq, 3), shared by all ``cells``, or (ncells, nq, 3).
        Returns values (ncells, nq, nb), gradients (ncells, nq, nb, 2) and,
        if requested, Laplacians (ncells, nq, nb).
        """
        return _tabulate(velocity_reference, self.family, self.mesh, cells, lam, hessians)

    def tabulate_pressure(self, cells, lam):
        vals, grads, _ = _tabulate(lambda _f, l: p1_basis(l), None, self.mesh, cells, lam, False)
        return vals, grads

    def local_velocity(self, coeffs, cells) -> np.ndarray:
        """Velocity coefficients per cell, shape (ncells, 2, nb)."""
        return coeffs[self.velocity_dofmap[cells]].reshape(len(cells), 2, self.n_local)

    def local_pressure(self, coeffs, cells) -> np.ndarray:
        return coeffs[self.pressure_dofmap[cells]]


def _tabulate(reference, family, mesh, cells, lam, hessians):
    cells = np.asarray(cells)
    lam = np.asarray(lam, float)
    vals, d1, d2 = reference(family, lam)
    G = mesh.bary_grads[cells]
    if lam.ndim == 2:
        vals = np.broadcast_to(vals, (len(cells),) + vals.shape)
        grads = np.einsum("qbk,ckd->cqbd", d1, G)
        lap = np.einsum("qbkl,ckd,cld->cqb", d2, G, G) if hessians else None
    else:
        grads = np.einsum("cqbk,ckd->cqbd", d1, G)
        lap = np.einsum("cqbkl,ckd,cld->cqb", d2, G, G) if hessians else None
    return vals, grads, lap


def build_space(mesh: Mesh, family: str = "taylor_hood", bc: BoundaryCondition = HOMOGENEOUS) -> FunctionSpace:
    return FunctionSpace(mesh, family, bc)


# -- fields -------------------------------------------------------------------

@dataclass
class DiscreteField:
    """Coefficient vector bound to the velocity or pressure part of a space."""

    space: FunctionSpace
    coefficients: np.ndarray
    kind: str = "velocity"

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, float)
        n = self.space.n_velocity if self.kind == "velocity" else self.space.n_pressure
        if self.kind not in ("velocity", "pressure"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.coefficients.shape != (n,):
            raise ValueError(f"{self.kind} field needs {n} coefficients, got {self.coefficients.shape}")

    def __call__(self, x):
        return eval_field(self, x)


def eval_basis(space: FunctionSpace, cell: int, x):
    """Scalar basis values and physical gradients of ``cell`` at point ``x``.

    Returns a dict with ``velocity`` (nb,), ``velocity_grad`` (nb, 2),
    ``pressure`` (3,) and ``pressure_grad`` (3, 2).
    """
    lam = space.mesh.barycentric(cell, np.asarray(x, float))
    if lam.min() < -_BARY_TOL:
        raise ValueError(f"point {tuple(np.asarray(x).tolist())} is outside cell {cell}")
    v, vg, _ = space.tabulate_velocity([cell], lam[None, :])
    p, pg = space.tabulate_pressure([cell], lam[None, :])
    return {"velocity": v[0, 0], "velocity_grad": vg[0, 0],
            "pressure": p[0, 0], "pressure_grad": pg[0, 0]}


def eval_field(field: DiscreteField, x, cell: int | None = None):
    """Value of ``field`` at ``x``: a 2-vector for velocity, a scalar for pressure."""
    space = field.space
    if cell is None:
        cell = locate_point(space.mesh, x)
    b = eval_basis(space, cell, x)
    if field.kind == "velocity":
        local = space.local_velocity(field.coefficients, [cell])[0]
        return local @ b["velocity"]
    return float(space.local_pressure(field.coefficients, [cell])[0] @ b["pressure"])


def interpolate_velocity(space: FunctionSpace, f) -> DiscreteField:
    """Nodal interpolant of ``f`` ((n, 2) -> (n, 2)).

    For the mini element the bubble coefficient matches ``f`` at the centroid.
    """
    vals = np.asarray(f(space.node_coords), float).reshape(-1, 2)
    if space.family == "mini":
        nv = space.mesh.n_vertices
        corner_mean = vals[space.mesh.cells].mean(axis=1)
        vals[nv:] = 27.0 * (vals[nv:] - corner_mean)
    return DiscreteField(space, np.concatenate([vals[:, 0], vals[:, 1]]), "velocity")


def interpolate_pressure(space: FunctionSpace, f) -> DiscreteField:
    vals = np.asarray(f(space.mesh.vertices), float).reshape(-1)
    return DiscreteField(space, vals, "pressure")
