"""Quadrature on triangles and edges, and the weights |x - z|^alpha and rho.

Triangle rules are stored in barycentric coordinates with weights that sum
to one, so ``area * sum(w * f)`` integrates over any cell. Degrees 1 and 2
use the centroid and edge-midpoint rules. Higher degrees use the conical
(collapsed) Gauss-Jacobi product, which is exact to degree ``2n - 1`` with
``n**2`` points and collapses onto local vertex 1. Cells containing a point
source are split at the source so that it sits on the collapsed vertex of
every sub-triangle, which gives the integrand its natural polar structure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 25
ESTIMATOR_DEGREE = 19


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,), sum to one
    exact_degree: int
    collapsed_vertex: int | None = None

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def rule_for_degree(d: int) -> QuadratureRule:
    """Rule exact for all polynomials of total degree ``<= d``."""
    if not 1 <= d <= MAX_DEGREE:
        raise ValueError(f"quadrature degree {d} outside [1, {MAX_DEGREE}]")
    if d == 1:
        return QuadratureRule(np.full((1, 3), 1.0 / 3.0), np.ones(1), 1)
    if d == 2:
        pts = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
        return QuadratureRule(pts, np.full(3, 1.0 / 3.0), 2)
    n = (d + 2) // 2
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xl, wl = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (1.0 + xj)
    v = 0.5 * (1.0 + xl)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wj / 4.0, wl / 2.0)
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    pts = np.stack([1.0 - x - y, x, y], axis=1)
    w = W.ravel()
    w = w / w.sum()
    return QuadratureRule(pts, w, 2 * n - 1, collapsed_vertex=1)


@lru_cache(maxsize=None)
def edge_rule(d: int = 11):
    """Gauss-Legendre on [0, 1]: (parameters, weights summing to one)."""
    n = (d + 2) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (1.0 + x), 0.5 * w


def physical_points(mesh, cells, bary) -> np.ndarray:
    """Map barycentric points (..., nq, 3) of ``cells`` to physical coordinates."""
    return np.einsum("...qk,...kd->...qd", bary, mesh.cell_points[cells])


def integrate(mesh, cell: int, f, rule: QuadratureRule) -> float:
    """Integral of ``f`` over ``cell``; ``f`` maps an (n, 2) array to (n,)."""
    x = rule.points @ mesh.cell_points[cell]
    return float(mesh.areas[cell] * np.dot(rule.weights, np.asarray(f(x), float)))


# -- splitting at point sources ----------------------------------------------

def split_rule(rule: QuadratureRule, lam_points, tol: float = 1e-14):
    """Sub-triangle quadrature of one cell split at interior/edge points.

    ``lam_points`` holds barycentric coordinates (k, 3) of the points at
    which to split. Returns ``(points, weights)`` in parent barycentric
    coordinates with weights summing to one. Each sub-triangle has its split
    point on the rule's collapsed vertex.
    """
    subs = [np.eye(3)]
    lam_points = np.atleast_2d(np.asarray(lam_points, float))
    for lam in lam_points:
        out = []
        for S in subs:
            # barycentric coordinates of lam inside sub-triangle S (rows = vertices)
            mu = np.linalg.solve(S.T, lam)
            if mu.min() < -1e-12:
                out.append(S)
                continue
            for i in range(3):
                frac = mu[(i + 2) % 3]
                if frac <= tol:
                    continue
                out.append(np.array([S[i], lam, S[(i + 1) % 3]]))
        subs = out
    slot = rule.collapsed_vertex if rule.collapsed_vertex is not None else 1
    pts, wts = [], []
    for S in subs:
        frac = abs(np.linalg.det(S))
        if frac <= tol:
            continue
        # rows of S are (A, z, B) for split triangles; move z to the collapsed slot
        order = [0, 1, 2]
        if slot != 1:
            order[1], order[slot] = order[slot], order[1]
        S = S[order]
        pts.append(rule.points @ S)
        wts.append(rule.weights * frac)
    pts = np.vstack(pts)
    wts = np.concatenate(wts)
    return pts, wts / wts.sum()


# -- weights ----------------------------------------------------------------

def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return alpha


def boundary_distance(mesh, points) -> np.ndarray:
    """Distance from each point to the mesh boundary."""
    pts = np.asarray(points, float).reshape(-1, 2)
    seg = mesh.vertices[mesh.boundary_edges]
    a, b = seg[:, 0], seg[:, 1]
    d = b - a
    r = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("psd,sd->ps", r, d) / np.einsum("sd,sd->s", d, d), 0.0, 1.0)
    proj = a[None] + t[..., None] * d[None]
    return np.linalg.norm(pts[:, None, :] - proj, axis=-1).min(axis=1)


def separation_distance(mesh, points) -> float:
    """d_Z: min of dist(Z, boundary) and the pairwise distances within Z."""
    pts = np.asarray(points, float).reshape(-1, 2)
    dist = float(boundary_distance(mesh, pts).min())
    if len(pts) > 1:
        pair = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        pair[np.diag_indices(len(pts))] = np.inf
        dist = min(dist, float(pair.min()))
    return dist


@dataclass(frozen=True)
class WeightSpec:
    """|x - z|^alpha for one source, the piecewise weight rho for several.

    rho is used whenever ``d_z`` is set, also for a single source. It equals |x - z|^alpha inside the open disc of radius d_Z / 2 around
    the nearest source z, and 1 elsewhere.
    """

    alpha: float
    points: np.ndarray
    d_z: float | None = None

    def __post_init__(self):
        check_alpha(self.alpha)
        pts = np.asarray(self.points, float).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("weight needs at least one source point")
        object.__setattr__(self, "points", pts)
        if len(pts) > 1 and self.d_z is None:
            raise ValueError("d_z is required for several source points")

    @classmethod
    def for_mesh(cls, mesh, alpha, points):
        pts = np.asarray(points, float).reshape(-1, 2)
        dz = separation_distance(mesh, pts) if len(pts) > 1 else None
        return cls(alpha, pts, dz)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        r = np.linalg.norm(x[..., None, :] - self.points, axis=-1)
        if self.d_z is None:
            return r[..., 0] ** self.alpha
        rmin = r.min(axis=-1)
        return np.where(rmin < 0.5 * self.d_z, rmin ** self.alpha, 1.0)


def weighted_norm_sq(mesh, cell: int, g, weight: WeightSpec, rule: QuadratureRule,
                     split: bool = True) -> float:
    """Integral over ``cell`` of ``weight(x) * g(x)**2``.

    Cells whose closure contains a source are split at it when ``split``.
    """
    lam = mesh.barycentric(np.full(len(weight.points), cell), weight.points)
    inside = lam[lam.min(axis=1) >= -1e-12]
    if split and len(inside):
        pts, w = split_rule(rule, np.clip(inside, 0.0, None) / np.clip(inside, 0.0, None).sum(1, keepdims=True))
    else:
        pts, w = rule.points, rule.weights
    x = pts @ mesh.cell_points[cell]
    gx = np.asarray(g(x), float)
    return float(mesh.areas[cell] * np.dot(w, weight(x) * gx * gx))
