"""Boundary of the convex hull of a 3D point set as a polyhedral surface.

Qhull (via scipy) finds the hull; its triangles are then regrouped into
planar facets with an exact orientation predicate so that the triangulation
of a facet does not depend on Qhull's tie breaking.  Every facet polygon is
re-triangulated as a fan from its lowest-index vertex.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import DegenerateInput
from .mesh import PolyhedralMesh
from .surfaces import build_polyhedral


def orient3d(a, b, c, d) -> int:
    """Exact sign of det[b-a, c-a, d-a] for float inputs."""
    A = [Fraction(float(t)) for t in a]
    rows = [[Fraction(float(p[i])) - A[i] for i in range(3)] for p in (b, c, d)]
    (x1, y1, z1), (x2, y2, z2), (x3, y3, z3) = rows
    det = x1 * (y2 * z3 - z2 * y3) - y1 * (x2 * z3 - z2 * x3) + z1 * (x2 * y3 - y2 * x3)
    return (det > 0) - (det < 0)


def _orient3d_fast(a, b, c, d) -> int:
    m = np.array([b - a, c - a, d - a])
    det = np.linalg.det(m)
    scale = np.prod(np.abs(m).sum(axis=1))
    if abs(det) > 1e-10 * scale:
        return int(np.sign(det))
    return orient3d(a, b, c, d)


def _collinear_in_plane(a, b, c) -> bool:
    """Exact test that three points are collinear (all 2x2 minors of the cross product vanish)."""
    A = [Fraction(float(t)) for t in a]
    u = [Fraction(float(b[i])) - A[i] for i in range(3)]
    v = [Fraction(float(c[i])) - A[i] for i in range(3)]
    return u[1] * v[2] == u[2] * v[1] and u[2] * v[0] == u[0] * v[2] and u[0] * v[1] == u[1] * v[0]


def convex_hull_mesh(points, name: str = "hull") -> PolyhedralMesh:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegenerateInput("points must be an (N, 3) array")
    if len(pts) < 4:
        raise DegenerateInput("need at least 4 points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInput(f"hull is degenerate (coplanar or collinear input): {exc}") from None
    tris = [list(map(int, t)) for t in hull.simplices]
    center = pts[hull.vertices].mean(axis=0)
    # orient every triangle outward
    for t in tris:
        if _orient3d_fast(pts[t[0]], pts[t[1]], pts[t[2]], center) > 0:
            t[1], t[2] = t[2], t[1]
    # union coplanar neighbours (exact predicate)
    parent = list(range(len(tris)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    edge_owner = {}
    for i, t in enumerate(tris):
        for k in range(3):
            a, b = t[k], t[(k + 1) % 3]
            edge_owner.setdefault((min(a, b), max(a, b)), []).append(i)
    for (a, b), owners in edge_owner.items():
        if len(owners) != 2:
            raise DegenerateInput("hull triangulation is not a closed surface")
        i, j = owners
        d = [v for v in tris[j] if v not in (a, b)][0]
        t = tris[i]
        if orient3d(pts[t[0]], pts[t[1]], pts[t[2]], pts[d]) == 0:
            parent[find(i)] = find(j)
    groups = {}
    for i in range(len(tris)):
        groups.setdefault(find(i), []).append(i)

    faces = []
    for members in groups.values():
        # boundary of the facet: directed edges not cancelled by their reverse
        directed = set()
        for i in members:
            t = tris[i]
            for k in range(3):
                e = (t[k], t[(k + 1) % 3])
                if (e[1], e[0]) in directed:
                    directed.remove((e[1], e[0]))
                else:
                    directed.add(e)
        nxt = dict(directed)
        if len(nxt) != len(directed):
            raise DegenerateInput("facet boundary is not a simple loop")
        start = min(nxt)
        loop = [start]
        while True:
            v = nxt[loop[-1]]
            if v == start:
                break
            loop.append(v)
            if len(loop) > len(nxt):
                raise DegenerateInput("facet boundary is not a simple loop")
        # drop vertices lying on a straight stretch of the facet boundary
        changed = True
        while changed and len(loop) > 3:
            changed = False
            for idx in range(len(loop)):
                a, b, c = loop[idx - 1], loop[idx], loop[(idx + 1) % len(loop)]
                if _collinear_in_plane(pts[a], pts[b], pts[c]):
                    loop.pop(idx)
                    changed = True
                    break
        k0 = int(np.argmin(loop))
        loop = loop[k0:] + loop[:k0]
        for j in range(1, len(loop) - 1):
            faces.append((loop[0], loop[j], loop[j + 1]))

    used = sorted({v for f in faces for v in f})
    # a vertex dropped from one facet loop must be dropped from all of them
    remap = {v: i for i, v in enumerate(used)}
    F = np.array([[remap[v] for v in f] for f in faces], dtype=np.int64)
    mesh = PolyhedralMesh.from_positions(pts[used], F, convex_embedded=True, name=name)
    mesh.source_index = np.array(used, dtype=np.int64)
    return mesh


def build_convex_hull_surface(points, name: str = "hull"):
    """Triangulated boundary of conv(points); interior and non-extreme points are discarded."""
    mesh = convex_hull_mesh(points, name=name)
    return build_polyhedral(mesh, name=name, provenance="convex_hull")
