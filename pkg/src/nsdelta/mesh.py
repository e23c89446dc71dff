"""Conforming triangular meshes and longest-edge bisection.

A :class:`Mesh` stores vertex coordinates, counterclockwise cells and the
tagged boundary edges. Everything else (edges, adjacency, areas, barycentric
gradients) is derived lazily and cached. Meshes are treated as immutable;
:func:`refine` returns a new mesh that remembers its parent.

Local edge ``i`` of a cell is the edge opposite local vertex ``i``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

BOUNDARY_TAGS = ("dirichlet", "neumann")

# relative tolerance used to call two squared edge lengths equal
_LENGTH_TIE_RTOL = 1e-12
_BARY_TOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid meshes, invalid queries or malformed mesh files."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class Mesh:
    """Conforming triangulation of a polygonal domain.

    Parameters
    ----------
    vertices : array_like, shape (nv, 2)
    cells : array_like, shape (nc, 3)
        Vertex indices, counterclockwise.
    boundary_edges : array_like, shape (nb, 2)
        Vertex pairs of the boundary edges (any order within a pair).
    boundary_tags : sequence of str, length nb
        ``"dirichlet"`` or ``"neumann"`` for each boundary edge.
    parent : array_like of int, optional
        Index of the parent cell in ``parent_mesh`` for each cell.
    parent_mesh : Mesh, optional
    validate : bool
        Check the invariants (orientation, edge manifoldness, tags).
    """

    def __init__(self, vertices, cells, boundary_edges, boundary_tags,
                 parent=None, parent_mesh=None, validate=True):
        self.vertices = _frozen(vertices, float).reshape(-1, 2)
        self.cells = _frozen(cells, np.int64).reshape(-1, 3)
        be = np.sort(np.asarray(boundary_edges, dtype=np.int64).reshape(-1, 2), axis=1)
        self.boundary_edges = _frozen(be, np.int64)
        self.boundary_tags = _frozen(np.asarray(boundary_tags, dtype=object), object)
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise MeshError("one tag per boundary edge is required")
        self.parent = None if parent is None else _frozen(parent, np.int64)
        self.parent_mesh = parent_mesh
        if validate:
            self._validate()

    def __repr__(self):
        return f"Mesh({self.n_vertices} vertices, {self.n_cells} cells)"

    # -- sizes ---------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # -- connectivity --------------------------------------------------
    def _edge_keys(self, pairs):
        pairs = np.sort(np.asarray(pairs, dtype=np.int64), axis=-1)
        return pairs[..., 0] * self.n_vertices + pairs[..., 1]

    @cached_property
    def _local_edge_pairs(self):
        c = self.cells
        return np.stack([c[:, [1, 2]], c[:, [2, 0]], c[:, [0, 1]]], axis=1)

    @cached_property
    def _edge_structure(self):
        keys = self._edge_keys(self._local_edge_pairs)
        uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
        nv = self.n_vertices
        edges = np.stack([uniq // nv, uniq % nv], axis=1)
        cell_edges = inverse.reshape(-1, 3)
        return uniq, edges, cell_edges

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs, lexicographically ordered."""
        return _frozen(self._edge_structure[1], np.int64)

    @cached_property
    def cell_edges(self) -> np.ndarray:
        """Global edge index of local edge ``i`` (opposite vertex ``i``)."""
        return _frozen(self._edge_structure[2], np.int64)

    @cached_property
    def edge_cells(self) -> np.ndarray:
        """Incident cells of each edge, ``-1`` in the second slot on the boundary."""
        ec = np.full((self.n_edges, 2), -1, dtype=np.int64)
        count = np.zeros(self.n_edges, dtype=np.int64)
        flat = self.cell_edges.ravel()
        owner = np.repeat(np.arange(self.n_cells), 3)
        order = np.argsort(flat, kind="stable")
        flat, owner = flat[order], owner[order]
        first = np.ones(len(flat), dtype=bool)
        first[1:] = flat[1:] != flat[:-1]
        ec[flat[first], 0] = owner[first]
        ec[flat[~first], 1] = owner[~first]
        np.add.at(count, flat, 1)
        if np.any(count > 2):
            raise MeshError("an edge is shared by more than two cells")
        return _frozen(ec, np.int64)

    @cached_property
    def edge_local_index(self) -> np.ndarray:
        """Local index of each edge inside the cells listed in :attr:`edge_cells`."""
        li = np.full((self.n_edges, 2), -1, dtype=np.int64)
        for side in range(2):
            cells = self.edge_cells[:, side]
            ok = cells >= 0
            match = self.cell_edges[cells[ok]] == np.arange(self.n_edges)[ok, None]
            li[ok, side] = np.argmax(match, axis=1)
        return _frozen(li, np.int64)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        """Boolean mask of edges shared by two cells."""
        return _frozen(self.edge_cells[:, 1] >= 0, bool)

    @cached_property
    def boundary_edge_ids(self) -> np.ndarray:
        """Global edge index of each entry of :attr:`boundary_edges`."""
        uniq = self._edge_structure[0]
        keys = self._edge_keys(self.boundary_edges)
        pos = np.searchsorted(uniq, keys)
        pos = np.minimum(pos, len(uniq) - 1)
        if len(keys) and not np.array_equal(uniq[pos], keys):
            raise MeshError("a tagged boundary edge is not an edge of the mesh")
        return _frozen(pos, np.int64)

    @cached_property
    def edge_tags(self) -> np.ndarray:
        """Tag per global edge; empty string for interior edges."""
        tags = np.full(self.n_edges, "", dtype=object)
        tags[self.boundary_edge_ids] = self.boundary_tags
        return _frozen(tags, object)

    def edge_index(self, a: int, b: int) -> int:
        """Global index of the edge joining vertices ``a`` and ``b``."""
        key = self._edge_keys([a, b])
        uniq = self._edge_structure[0]
        pos = int(np.searchsorted(uniq, key))
        if pos >= len(uniq) or uniq[pos] != key:
            raise MeshError(f"({a}, {b}) is not an edge")
        return pos

    # -- geometry ------------------------------------------------------
    @cached_property
    def cell_points(self) -> np.ndarray:
        """Vertex coordinates per cell, shape (nc, 3, 2)."""
        return _frozen(self.vertices[self.cells], float)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.cell_points
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return _frozen(0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]), float)

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        v = self.vertices[self.edges]
        return _frozen(np.linalg.norm(v[:, 1] - v[:, 0], axis=1), float)

    @cached_property
    def diameters(self) -> np.ndarray:
        """h_T: longest edge of each cell."""
        return _frozen(self.edge_lengths[self.cell_edges].max(axis=1), float)

    @cached_property
    def centroids(self) -> np.ndarray:
        return _frozen(self.cell_points.mean(axis=1), float)

    @cached_property
    def bary_grads(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape (nc, 3, 2)."""
        p = self.cell_points
        # gradient of lambda_i is the inward normal of edge i over its height
        e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
        rot = np.stack([-e[..., 1], e[..., 0]], axis=-1)
        return _frozen(rot / (2.0 * self.signed_areas[:, None, None]), float)

    def barycentric(self, cells, points) -> np.ndarray:
        """Barycentric coordinates of ``points`` (..., 2) in ``cells`` (broadcast)."""
        cells = np.asarray(cells)
        p0 = self.cell_points[cells, 0]
        g = self.bary_grads[cells]
        d = np.asarray(points, float) - p0
        l12 = np.einsum("...kd,...d->...k", g[..., 1:, :], d)
        return np.concatenate([1.0 - l12.sum(axis=-1, keepdims=True), l12], axis=-1)

    def edge_normals(self) -> np.ndarray:
        """Unit normal of each edge, pointing out of ``edge_cells[:, 0]``."""
        v = self.vertices[self.edges]
        t = v[:, 1] - v[:, 0]
        n = np.stack([t[:, 1], -t[:, 0]], axis=1) / self.edge_lengths[:, None]
        # flip where the normal points into the first cell
        mid = v.mean(axis=1)
        inward = np.einsum("ij,ij->i", self.centroids[self.edge_cells[:, 0]] - mid, n) > 0
        n[inward] *= -1.0
        return n

    def min_angles(self) -> np.ndarray:
        """Smallest interior angle (radians) of each cell."""
        p = self.cell_points
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return np.min(angles, axis=0)

    @cached_property
    def longest_local_edge(self) -> np.ndarray:
        """Local index of the refinement edge; ties go to the lowest global edge index."""
        lengths2 = (self.edge_lengths ** 2)[self.cell_edges]
        top = lengths2.max(axis=1, keepdims=True)
        candidates = lengths2 >= top * (1.0 - _LENGTH_TIE_RTOL)
        ids = np.where(candidates, self.cell_edges, np.iinfo(np.int64).max)
        return _frozen(np.argmin(ids, axis=1), np.int64)

    # -- validation ----------------------------------------------------
    def _validate(self):
        if self.n_cells == 0:
            raise MeshError("mesh has no cells")
        if self.cells.min() < 0 or self.cells.max() >= self.n_vertices:
            raise MeshError("cell references a missing vertex")
        if np.any(self.signed_areas <= 0.0):
            bad = np.flatnonzero(self.signed_areas <= 0.0)[:5]
            raise MeshError(f"cells with non-positive area: {bad.tolist()}")
        _ = self.edge_cells
        directed = self._local_edge_pairs.reshape(-1, 2)
        dkeys = directed[:, 0] * self.n_vertices + directed[:, 1]
        if len(np.unique(dkeys)) != len(dkeys):
            raise MeshError("two cells traverse an edge in the same direction")
        boundary = np.flatnonzero(~self.interior_edges)
        tagged = np.zeros(self.n_edges, dtype=bool)
        tagged[self.boundary_edge_ids] = True
        if not np.array_equal(np.flatnonzero(tagged), boundary):
            raise MeshError("boundary edges and tagged edges differ")
        bad_tags = set(self.boundary_tags.tolist()) - set(BOUNDARY_TAGS)
        if bad_tags:
            raise MeshError(f"unknown boundary tags {sorted(bad_tags)}")


# -- cell / point queries -----------------------------------------------

def cell_diameter(mesh: Mesh, cell: int) -> float:
    """Longest pairwise vertex distance of ``cell``."""
    return float(mesh.diameters[cell])


def dirac_distance(mesh: Mesh, cell: int, z) -> float:
    """max over the closed cell of |x - z|, attained at a vertex by convexity."""
    d = np.linalg.norm(mesh.cell_points[cell] - np.asarray(z, float), axis=-1)
    return float(d.max())


def dirac_distance_multi(mesh: Mesh, cell: int, points) -> float:
    """min over z in ``points`` of :func:`dirac_distance`."""
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("at least one point is required")
    return float(cell_dirac_distances(mesh, pts)[cell])


def cell_dirac_distances(mesh: Mesh, points) -> np.ndarray:
    """D_{T,Z} for every cell (D_T when ``points`` holds a single z)."""
    pts = np.asarray(points, float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("at least one point is required")
    d = np.linalg.norm(mesh.cell_points[:, None, :, :] - pts[None, :, None, :], axis=-1)
    return d.max(axis=2).min(axis=1)


def cells_containing(mesh: Mesh, z, tol: float = _BARY_TOL) -> np.ndarray:
    """Indices of all closed cells containing ``z``."""
    lam = mesh.barycentric(np.arange(mesh.n_cells), np.asarray(z, float)[None, :])
    return np.flatnonzero(lam.min(axis=1) >= -tol)


def locate_point(mesh: Mesh, z) -> int:
    """Index of a cell whose closure contains ``z``.

    Raises
    ------
    MeshError
        If ``z`` lies outside the closed domain.
    """
    found = cells_containing(mesh, z)
    if len(found) == 0:
        raise MeshError(f"point {tuple(np.asarray(z).tolist())} is outside the domain")
    return int(found[0])


def locate_points(mesh: Mesh, points) -> np.ndarray:
    """Vectorised :func:`locate_point` using a centroid KD-tree."""
    points = np.asarray(points, float).reshape(-1, 2)
    tree = cKDTree(mesh.centroids)
    k = min(mesh.n_cells, 16)
    out = np.full(len(points), -1, dtype=np.int64)
    _, cand = tree.query(points, k=k)
    cand = np.asarray(cand).reshape(len(points), k)
    lam = mesh.barycentric(cand, points[:, None, :])
    ok = lam.min(axis=-1) >= -_BARY_TOL
    hit = ok.any(axis=1)
    out[hit] = cand[hit, np.argmax(ok[hit], axis=1)]
    for i in np.flatnonzero(~hit):
        out[i] = locate_point(mesh, points[i])
    return out


# -- refinement ------------------------------------------------------------

def _closure(mesh: Mesh, marked_edges: np.ndarray) -> np.ndarray:
    longest = mesh.cell_edges[np.arange(mesh.n_cells), mesh.longest_local_edge]
    while True:
        touched = marked_edges[mesh.cell_edges].any(axis=1)
        need = touched & ~marked_edges[longest]
        if not need.any():
            return marked_edges
        marked_edges[longest[need]] = True


def refine(mesh: Mesh, marked) -> Mesh:
    """Longest-edge bisection of the marked cells with conformity closure.

    Every marked cell is bisected across its longest edge. Any cell that ends
    up with a bisected edge must also have its longest edge bisected; this is
    iterated to a fixed point, after which each cell is split into two, three
    or four children (Rivara's partition). Boundary tags pass to the halves
    of bisected boundary edges, and ``parent`` records the genealogy.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray)
                                  else marked, dtype=np.int64))
    if len(marked) and (marked[0] < 0 or marked[-1] >= mesh.n_cells):
        raise MeshError("marked cell index out of range")
    nv, nc = mesh.n_vertices, mesh.n_cells
    if len(marked) == 0:
        return Mesh(mesh.vertices, mesh.cells, mesh.boundary_edges, mesh.boundary_tags,
                    parent=np.arange(nc), parent_mesh=mesh, validate=False)

    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    edge_marked[mesh.cell_edges[marked, mesh.longest_local_edge[marked]]] = True
    edge_marked = _closure(mesh, edge_marked)

    split_edges = np.flatnonzero(edge_marked)
    midpoint = np.full(mesh.n_edges, -1, dtype=np.int64)
    midpoint[split_edges] = nv + np.arange(len(split_edges))
    ends = mesh.vertices[mesh.edges[split_edges]]
    vertices = np.vstack([mesh.vertices, ends.mean(axis=1)])

    cell_split = edge_marked[mesh.cell_edges]
    keep = ~cell_split.any(axis=1)
    new_cells = [mesh.cells[keep]]
    parents = [np.flatnonzero(keep)]

    refined = np.flatnonzero(~keep)
    k = mesh.longest_local_edge[refined]
    cells = mesh.cells[refined]
    ce = mesh.cell_edges[refined]
    rows = np.arange(len(refined))
    # rotate so that the longest edge is opposite local vertex 0
    v0 = cells[rows, k]
    v1 = cells[rows, (k + 1) % 3]
    v2 = cells[rows, (k + 2) % 3]
    m = midpoint[ce[rows, k]]
    m_01 = midpoint[ce[rows, (k + 2) % 3]]  # edge v0-v1
    m_20 = midpoint[ce[rows, (k + 1) % 3]]  # edge v2-v0

    # child (v0, v1, m): split edge v0-v1 if marked
    a = m_01 < 0
    new_cells.append(np.stack([v0[a], v1[a], m[a]], axis=1))
    parents.append(refined[a])
    b = ~a
    new_cells.append(np.stack([m[b], v0[b], m_01[b]], axis=1))
    new_cells.append(np.stack([m[b], m_01[b], v1[b]], axis=1))
    parents += [refined[b], refined[b]]
    # child (v0, m, v2): split edge v2-v0 if marked
    a = m_20 < 0
    new_cells.append(np.stack([v0[a], m[a], v2[a]], axis=1))
    parents.append(refined[a])
    b = ~a
    new_cells.append(np.stack([m[b], v2[b], m_20[b]], axis=1))
    new_cells.append(np.stack([m[b], m_20[b], v0[b]], axis=1))
    parents += [refined[b], refined[b]]

    parent = np.concatenate(parents)
    order = np.argsort(parent, kind="stable")
    cells_out = np.vstack(new_cells)[order]
    parent = parent[order]

    bid = mesh.boundary_edge_ids
    bmid = midpoint[bid]
    whole = bmid < 0
    be = mesh.boundary_edges
    halves_a = np.stack([be[~whole, 0], bmid[~whole]], axis=1)
    halves_b = np.stack([bmid[~whole], be[~whole, 1]], axis=1)
    bedges = np.vstack([be[whole], halves_a, halves_b])
    btags = np.concatenate([mesh.boundary_tags[whole], mesh.boundary_tags[~whole],
                            mesh.boundary_tags[~whole]])
    return Mesh(vertices, cells_out, bedges, btags, parent=parent, parent_mesh=mesh,
                validate=False)


def uniform_refine(mesh: Mesh, levels: int = 1) -> Mesh:
    """Apply ``2 * levels`` bisection sweeps marking every cell.

    Two sweeps halve every edge of a criss-cross mesh, so one level is one
    halving of h.
    """
    for _ in range(2 * levels):
        mesh = refine(mesh, np.arange(mesh.n_cells))
    return mesh


def ancestor_map(fine: Mesh, coarse: Mesh) -> np.ndarray:
    """Index of the ``coarse`` cell containing each cell of ``fine``.

    ``coarse`` must appear in the genealogy chain of ``fine``.
    """
    anc = np.arange(fine.n_cells)
    m = fine
    while m is not coarse:
        if m.parent is None or m.parent_mesh is None:
            raise MeshError("meshes are not nested")
        anc = m.parent[anc]
        m = m.parent_mesh
    return anc


# -- conformity checks ----------------------------------------------------

def conformity_violations(mesh: Mesh, expected_area: float | None = None) -> list[str]:
    """Fast structural conformity check; returns a list of problems.

    Checks orientation, that every edge has one or two cells traversing it in
    opposite directions, that single-cell edges are exactly the tagged
    boundary edges, that no vertex lies inside another edge (hanging node),
    and optionally the total area.
    """
    problems = []
    if np.any(mesh.signed_areas <= 0):
        problems.append("non-positive cell area")
    try:
        mesh._validate()
    except MeshError as exc:
        problems.append(str(exc))
        return problems
    v = mesh.vertices[mesh.edges]
    mid = v.mean(axis=1)
    half = 0.5 * mesh.edge_lengths
    tree = cKDTree(mesh.vertices)
    near = tree.query_ball_point(mid, r=half * (1.0 - 1e-9))
    for e, cand in enumerate(near):
        if not cand:
            continue
        cand = np.asarray(cand)
        cand = cand[(cand != mesh.edges[e, 0]) & (cand != mesh.edges[e, 1])]
        if len(cand) == 0:
            continue
        t = v[e, 1] - v[e, 0]
        d = mesh.vertices[cand] - v[e, 0]
        cross = np.abs(t[0] * d[:, 1] - t[1] * d[:, 0])
        if np.any(cross <= 1e-12 * mesh.edge_lengths[e] ** 2):
            problems.append(f"hanging vertex on edge {e}")
            break
    if expected_area is not None:
        total = mesh.signed_areas.sum()
        if abs(total - expected_area) > 1e-12 * abs(expected_area):
            problems.append(f"area {total!r} != {expected_area!r}")
    return problems


def _side(a, b, p):
    return (b[..., 0] - a[..., 0]) * (p[..., 1] - a[..., 1]) - \
           (b[..., 1] - a[..., 1]) * (p[..., 0] - a[..., 0])


def _pair_ok(P, Q, cp, cq, tol):
    """Classify the intersection of two closed triangles with shared vertices."""
    shared = set(cp.tolist()) & set(cq.tolist())
    if len(shared) == 3:
        return False
    if len(shared) == 2:
        i = [k for k in range(3) if cp[k] not in shared][0]
        j = [k for k in range(3) if cq[k] not in shared][0]
        a, b = P[(i + 1) % 3], P[(i + 2) % 3]
        return _side(a, b, P[i]) * _side(a, b, Q[j]) < 0
    # separating edge line (touching allowed), then the touching set must be
    # empty (no shared vertex) or the single shared vertex
    for T, U in ((P, Q), (Q, P)):
        for k in range(3):
            a, b = T[k], T[(k + 1) % 3]
            su = _side(a, b, U) * np.sign(_side(a, b, T[(k + 2) % 3]))
            if np.any(su > tol):
                continue
            on = np.abs(su) <= tol
            if not on.any():
                return True
            d = b - a
            t = (U[on] - a) @ d / (d @ d)
            overlap = min(t.max(), 1.0) - max(t.min(), 0.0)
            if not shared:
                return overlap < -1e-12
            return overlap <= 1e-12
    return False


def pairwise_violations(mesh: Mesh, chunk: int = 2048) -> list[tuple[int, int]]:
    """Exhaustive pairwise classification of closed-cell intersections.

    Two distinct cells may meet in nothing, one shared vertex or one full
    shared edge. Candidate pairs are those with overlapping bounding boxes.
    Returns the offending pairs.
    """
    p = mesh.cell_points
    lo, hi = p.min(axis=1), p.max(axis=1)
    scale = float(np.ptp(mesh.vertices, axis=0).max())
    eps = 1e-12 * scale
    tol = 1e-14 * scale ** 2
    bad = []
    n = mesh.n_cells
    for s in range(0, n, chunk):
        blo, bhi = lo[s:s + chunk], hi[s:s + chunk]
        overlap = np.all((blo[:, None, :] <= hi[None, :, :] + eps) &
                         (lo[None, :, :] <= bhi[:, None, :] + eps), axis=2)
        ii, jj = np.nonzero(overlap)
        ii = ii + s
        keep = ii < jj
        for i, j in zip(ii[keep], jj[keep]):
            if not _pair_ok(p[i], p[j], mesh.cells[i], mesh.cells[j], tol):
                bad.append((int(i), int(j)))
    return bad


# -- text serialisation ---------------------------------------------------

def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text node/element format.

    Header ``NV NC NE`` followed by vertex lines ``x y``, cell lines
    ``v0 v1 v2`` and boundary-edge lines ``v0 v1 tag``. Floats are written
    with ``repr`` so that reading back is bit-exact.
    """
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_cells} {len(mesh.boundary_edges)}\n")
        for x, y in mesh.vertices.tolist():
            fh.write(f"{x!r} {y!r}\n")
        for a, b, c in mesh.cells.tolist():
            fh.write(f"{a} {b} {c}\n")
        for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags):
            fh.write(f"{a} {b} {tag}\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        nv, nc, ne = (int(t) for t in lines[0])
        verts = [[float(t) for t in ln] for ln in lines[1:1 + nv]]
        cells = [[int(t) for t in ln] for ln in lines[1 + nv:1 + nv + nc]]
        bl = lines[1 + nv + nc:1 + nv + nc + ne]
        bedges = [[int(ln[0]), int(ln[1])] for ln in bl]
        tags = [ln[2] for ln in bl]
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from exc
    if len(verts) != nv or len(cells) != nc or len(bedges) != ne:
        raise MeshError(f"malformed mesh file {path}: truncated")
    return Mesh(verts, cells, bedges, tags)
