"""Doubling of a planar polygon along its boundary."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateInput
from .mesh import PolyhedralMesh
from .surfaces import build_polyhedral


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1, d2 = _cross(p3, p4, p1), _cross(p3, p4, p2)
    d3, d4 = _cross(p1, p2, p3), _cross(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True

    def on_seg(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    return ((d1 == 0 and on_seg(p3, p4, p1)) or (d2 == 0 and on_seg(p3, p4, p2))
            or (d3 == 0 and on_seg(p1, p2, p3)) or (d4 == 0 and on_seg(p1, p2, p4)))


def check_simple(poly: np.ndarray) -> None:
    n = len(poly)
    if n < 3:
        raise DegenerateInput("polygon needs at least 3 vertices")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                raise DegenerateInput(f"polygon is self-intersecting (edges {i} and {j})")
    if len({tuple(p) for p in poly.tolist()}) != n:
        raise DegenerateInput("polygon has repeated vertices")


def signed_area(poly) -> float:
    p = np.asarray(poly, dtype=float)
    return 0.5 * float(np.sum(p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1]))


def ear_clip(poly: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple counter-clockwise polygon; returns CCW index triples."""
    idx = list(range(len(poly)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(poly) ** 2:
            raise DegenerateInput("ear clipping failed (degenerate polygon)")
        m = len(idx)
        for t in range(m):
            a, b, c = idx[t - 1], idx[t], idx[(t + 1) % m]
            if _cross(poly[a], poly[b], poly[c]) <= 0:
                continue
            inside = False
            for o in idx:
                if o in (a, b, c):
                    continue
                p = poly[o]
                if _cross(poly[a], poly[b], p) >= 0 and _cross(poly[b], poly[c], p) >= 0 and _cross(poly[c], poly[a], p) >= 0:
                    inside = True
                    break
            if inside:
                continue
            tris.append((a, b, c))
            idx.pop(t)
            break
        else:
            raise DegenerateInput("no ear found (polygon is not simple)")
    tris.append(tuple(idx))
    return tris


def double_polygon_mesh(polygon, name: str = "doubled_polygon") -> PolyhedralMesh:
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2:
        raise DegenerateInput("polygon must be an (n, 2) vertex loop")
    check_simple(poly)
    if signed_area(poly) < 0:
        poly = poly[::-1].copy()
    tris = ear_clip(poly)
    n, T = len(poly), len(tris)
    faces = [t for t in tris] + [(a, c, b) for (a, b, c) in tris]
    twins = -np.ones((2 * T, 3, 2), dtype=np.int64)
    for copy in (0, 1):
        owner = {}
        for i in range(T):
            fi = copy * T + i
            tri = faces[fi]
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                owner.setdefault((min(a, b), max(a, b)), []).append((fi, k))
        for (a, b), lst in owner.items():
            if len(lst) == 2:
                (f0, k0), (f1, k1) = lst
                twins[f0, k0] = (f1, k1)
                twins[f1, k1] = (f0, k0)
    # glue the polygon sides of the two copies
    for i in range(T):
        for k in range(3):
            a, b = faces[i][k], faces[i][(k + 1) % 3]
            if twins[i, k, 0] >= 0:
                continue
            if (b - a) % n not in (1, n - 1):
                raise DegenerateInput("unexpected unmatched diagonal in triangulation")
            tri2 = faces[T + i]
            for j in range(3):
                if {tri2[j], tri2[(j + 1) % 3]} == {a, b}:
                    twins[i, k] = (T + i, j)
                    twins[T + i, j] = (i, k)
    mesh = PolyhedralMesh.from_positions(poly, np.array(faces), twins=twins, name=name)
    mesh.polygon = poly
    mesh.copy_of_face = np.array([0] * T + [1] * T)
    return mesh


def double_polygon(polygon, name: str = "doubled_polygon"):
    """Two copies of a simple polygon glued along the boundary (a closed polyhedral surface)."""
    return build_polyhedral(double_polygon_mesh(polygon, name=name), name=name, provenance="doubling")
