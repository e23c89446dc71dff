"""Experiment domains and their initial triangulations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nsdelta.mesh import Mesh, MeshError

CATALOG = ("unit_square", "l_shape", "channel_4x1", "channel_10x1_obstacle")


@dataclass(frozen=True)
class DomainShape:
    """Polygonal domain with tagged boundary segments.

    ``loops[0]`` is the outer boundary (counterclockwise), further loops are
    holes (clockwise). ``tags[i][k]`` is the tag of the segment from
    ``loops[i][k]`` to ``loops[i][k + 1]``.
    """

    id: str
    loops: tuple = field(default=())
    tags: tuple = field(default=())

    @property
    def area(self) -> float:
        return float(sum(_shoelace(np.asarray(loop, float)) for loop in self.loops))

    def segments(self):
        """Yield ``(a, b, tag)`` for every boundary segment."""
        for loop, tags in zip(self.loops, self.tags):
            loop = np.asarray(loop, float)
            for k in range(len(loop)):
                yield loop[k], loop[(k + 1) % len(loop)], tags[k]


def _shoelace(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def catalog_shape(name: str) -> DomainShape:
    """The domains of the numerical experiments."""
    D = "dirichlet"
    if name == "unit_square":
        return DomainShape(name, (_rect(0, 0, 1, 1),), ((D,) * 4,))
    if name == "l_shape":
        loop = ((-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1))
        return DomainShape(name, (loop,), ((D,) * 6,))
    if name == "channel_4x1":
        return DomainShape(name, (_rect(0, 0, 4, 1),), ((D, "neumann", D, D),))
    if name == "channel_10x1_obstacle":
        outer = _rect(0, 0, 10, 1)
        hole = ((2, 0.4), (2, 0.6), (4, 0.6), (4, 0.4))
        return DomainShape(name, (outer, hole), ((D, "neumann", D, D), (D,) * 4))
    raise ValueError(f"unknown domain {name!r}; expected one of {CATALOG}")


def custom_polygon(points, tags=None) -> DomainShape:
    """A simple polygon without holes; reoriented counterclockwise."""
    pts = np.asarray(points, float)
    if tags is None:
        tags = ("dirichlet",) * len(pts)
    tags = tuple(tags)
    if _shoelace(pts) < 0:
        n = len(pts)
        pts = pts[::-1]
        tags = tuple(tags[(n - 2 - i) % n] for i in range(n))
    return DomainShape("custom_polygon", (tuple(map(tuple, pts)),), (tags,))


# -- construction helpers -------------------------------------------------

def _segments_intersect(p1, p2, q1, q2, tol=1e-14):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol and
                min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol)

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and \
       ((d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)):
        return True
    return ((abs(d1) <= tol and on_seg(q1, q2, p1)) or (abs(d2) <= tol and on_seg(q1, q2, p2)) or
            (abs(d3) <= tol and on_seg(p1, p2, q1)) or (abs(d4) <= tol and on_seg(p1, p2, q2)))


def is_simple_polygon(points) -> bool:
    pts = np.asarray(points, float)
    n = len(pts)
    if n < 3:
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                return False
    return abs(_shoelace(pts)) > 0


def _ear_clip(pts):
    """Triangulate a simple counterclockwise polygon (no interior vertices)."""
    idx = list(range(len(pts)))
    tris = []

    def cross(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(pts) ** 2:
            raise MeshError("ear clipping failed")
        n = len(idx)
        best = None
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = pts[i0], pts[i1], pts[i2]
            if cross(a, b, c) <= 1e-14:
                continue
            inside = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = pts[j]
                if cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0:
                    inside = True
                    break
            if inside:
                continue
            # prefer the ear with the largest minimum angle
            q = _min_angle(a, b, c)
            if best is None or q > best[0]:
                best = (q, k)
        if best is None:
            raise MeshError("polygon has no ear; is it simple?")
        k = best[1]
        tris.append((idx[k - 1], idx[k], idx[(k + 1) % n]))
        idx.pop(k)
    tris.append(tuple(idx))
    return tris


def _min_angle(a, b, c):
    p = np.array([a, b, c], float)
    out = np.pi
    for i in range(3):
        u = p[(i + 1) % 3] - p[i]
        v = p[(i + 2) % 3] - p[i]
        out = min(out, np.arccos(np.clip(u @ v / np.linalg.norm(u) / np.linalg.norm(v), -1, 1)))
    return out


def _boundary_of(cells, nv):
    pairs = np.concatenate([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]])
    keys = np.sort(pairs, axis=1)
    keys = keys[:, 0] * nv + keys[:, 1]
    uniq, counts = np.unique(keys, return_counts=True)
    single = uniq[counts == 1]
    return np.stack([single // nv, single % nv], axis=1)


def _tag_edges(vertices, bedges, shape: DomainShape):
    tags = []
    for a, b in bedges:
        pa, pb = vertices[a], vertices[b]
        mid = 0.5 * (pa + pb)
        tag = None
        for s0, s1, t in shape.segments():
            d = s1 - s0
            L2 = d @ d
            for p in (pa, pb, mid):
                r = p - s0
                if abs(d[0] * r[1] - d[1] * r[0]) > 1e-12 * L2:
                    break
                s = (r @ d) / L2
                if s < -1e-12 or s > 1 + 1e-12:
                    break
            else:
                tag = t
                break
        if tag is None:
            raise MeshError(f"boundary edge ({a}, {b}) is not on the domain boundary")
        tags.append(tag)
    return tags


def _grid(xs, ys, skip=(), crisscross=False):
    """Rectangular grid split into triangles; ``skip`` holds (i, j) blocks to omit."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    verts = {}
    vlist = []

    def vid(p):
        key = (round(p[0], 12), round(p[1], 12))
        if key not in verts:
            verts[key] = len(vlist)
            vlist.append(p)
        return verts[key]

    cells = []
    for j in range(len(ys) - 1):
        for i in range(len(xs) - 1):
            if (i, j) in skip:
                continue
            a = vid((xs[i], ys[j]))
            b = vid((xs[i + 1], ys[j]))
            c = vid((xs[i + 1], ys[j + 1]))
            d = vid((xs[i], ys[j + 1]))
            if crisscross:
                m = vid((0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])))
                cells += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
            else:
                cells += [(a, b, c), (a, c, d)]
    return np.array(vlist, float), np.array(cells, np.int64)


def build_initial_mesh(shape: DomainShape) -> Mesh:
    """Initial triangulation T_0 of a catalog or custom domain.

    Catalog meshes: criss-cross unit square (4 cells), the L-shape as three
    unit squares cut by diagonals through the reentrant corner (6 cells), the
    4x1 channel as four criss-cross unit squares (16 cells) and the obstacle
    channel as a 0.4-wide grid aligned with the obstacle, each rectangle cut
    by its diagonal (140 cells).
    """
    sid = shape.id
    if sid == "unit_square":
        verts, cells = _grid([0, 1], [0, 1], crisscross=True)
    elif sid == "l_shape":
        verts = np.array([(-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)], float)
        cells = np.array([(0, 1, 2), (0, 2, 7), (7, 2, 6), (2, 5, 6), (2, 3, 4), (2, 4, 5)], np.int64)
    elif sid == "channel_4x1":
        verts, cells = _grid([0, 1, 2, 3, 4], [0, 1], crisscross=True)
    elif sid == "channel_10x1_obstacle":
        xs = np.linspace(0.0, 10.0, 26)
        skip = {(i, 1) for i in range(5, 10)}
        verts, cells = _grid(xs, [0.0, 0.4, 0.6, 1.0], skip=skip)
    elif sid == "custom_polygon":
        if len(shape.loops) != 1:
            raise MeshError("custom polygons with holes are not supported")
        pts = np.asarray(shape.loops[0], float)
        if not is_simple_polygon(pts):
            raise MeshError("custom polygon is not simple")
        if _shoelace(pts) < 0:
            raise MeshError("custom polygon must be counterclockwise")
        verts = pts
        cells = np.array(_ear_clip(pts), np.int64)
    else:
        raise ValueError(f"unknown domain {sid!r}")
    bedges = _boundary_of(cells, len(verts))
    tags = _tag_edges(verts, bedges, shape)
    return Mesh(verts, cells, bedges, tags)


def mesh_from_cells(vertices, cells, tag="dirichlet") -> Mesh:
    """Mesh with every boundary edge given the same tag (tests and examples)."""
    vertices = np.asarray(vertices, float)
    cells = np.asarray(cells, np.int64)
    bedges = _boundary_of(cells, len(vertices))
    return Mesh(vertices, cells, bedges, [tag] * len(bedges))
