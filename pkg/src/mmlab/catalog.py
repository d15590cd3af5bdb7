"""Named test surfaces used by the checks and the acceptance suite."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial import Delaunay

from .geometry.doubling import double_polygon
from .geometry.hull import build_convex_hull_surface
from .geometry.mesh import PolyhedralMesh
from .geometry.surfaces import build_polyhedral
from .rng import substream


def cube(side: float = 1.0):
    pts = np.array(list(itertools.product([0.0, side], repeat=3)))
    return build_convex_hull_surface(pts, name="cube")


def tetrahedron(edge: float = 1.0):
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    pts *= edge / (2 * math.sqrt(2))
    return build_convex_hull_surface(pts, name="tetrahedron")


def box(a: float = 1.0, b: float = 1.0, c: float = 1.0):
    pts = np.array(list(itertools.product([0.0, a], [0.0, b], [0.0, c])))
    return build_convex_hull_surface(pts, name="box")


def doubled_square(side: float = 1.0):
    return double_polygon(side * np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float), name="doubled_square")


def doubled_triangle(side: float = 1.0):
    h = math.sqrt(3) / 2
    return double_polygon(side * np.array([[0, 0], [1, 0], [0.5, h]]), name="doubled_triangle")


def flat_square(n_points: int = 40, seed: int = 0, side: float = 1.0):
    """Randomly triangulated planar square (flat, with boundary)."""
    rng = substream(seed, 901)
    pts = np.vstack([[[0, 0], [1, 0], [1, 1], [0, 1]], 0.05 + 0.9 * rng.random((n_points, 2))]) * side
    tri = Delaunay(pts).simplices
    return build_polyhedral(PolyhedralMesh.from_positions(pts, tri, name="flat_square"), name="flat_square",
                            provenance="catalog")


def sphere_mesh(n: int = 400, R: float = 1.0):
    """Convex hull of a Fibonacci point set on the sphere of radius R."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (1 + 5 ** 0.5) * i
    r = np.sqrt(1 - z * z)
    pts = R * np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return build_convex_hull_surface(pts, name=f"sphere_mesh_{n}")


def paraboloid_cap(n_points: int = 200, seed: int = 0, height: float = 0.05, depth: float = 0.5):
    """Hull of samples on z = height*(1 - x^2 - y^2) over the unit disk plus four base corners."""
    rng = substream(seed, 902)
    u = rng.random((n_points, 2))
    rad = np.sqrt(u[:, 0]) * 0.95
    ang = 2 * math.pi * u[:, 1]
    x, y = rad * np.cos(ang), rad * np.sin(ang)
    top = np.column_stack([x, y, height * (1 - x * x - y * y)])
    base = np.array([[-1, -1, -depth], [1, -1, -depth], [1, 1, -depth], [-1, 1, -depth]], dtype=float)
    return build_convex_hull_surface(np.vstack([top, base]), name=f"paraboloid_cap_{n_points}_{seed}")


def _lifted_plane(pts, tri, c):
    P = np.column_stack([pts, c * (pts[:, 0] ** 2 + pts[:, 1] ** 2)])
    return PolyhedralMesh.from_positions(P, tri, name="convex_plane")


def random_convex_plane(n_points: int = 50, seed: int = 0, total_defect: float = 0.2):
    """Delaunay triangulation of random points lifted onto z = c (x^2 + y^2).

    The lift is convex, so every interior vertex has a nonnegative defect;
    ``c`` is set by bisection so that the interior defects sum to
    ``total_defect``.
    """
    rng = substream(seed, 903)
    pts = np.vstack([[[-1, -1], [1, -1], [1, 1], [-1, 1]], -0.95 + 1.9 * rng.random((n_points - 4, 2))])
    tri = Delaunay(pts).simplices

    interior = np.ones(len(pts), bool)
    interior[:4] = False
    interior[np.abs(pts).max(axis=1) >= 1 - 1e-12] = False

    def omega(c):
        P = np.column_stack([pts, c * (pts[:, 0] ** 2 + pts[:, 1] ** 2)])
        ang = np.zeros(len(pts))
        for k in range(3):
            a, b, d = P[tri[:, k]], P[tri[:, (k + 1) % 3]], P[tri[:, (k + 2) % 3]]
            u, w = b - a, d - a
            cosv = np.einsum("ij,ij->i", u, w) / np.linalg.norm(u, axis=1) / np.linalg.norm(w, axis=1)
            np.add.at(ang, tri[:, k], np.arccos(np.clip(cosv, -1, 1)))
        return float((2 * math.pi - ang[interior]).sum())

    lo, hi = 0.0, 1.0
    while omega(hi) < total_defect:
        hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if omega(mid) < total_defect:
            lo = mid
        else:
            hi = mid
    mesh = _lifted_plane(pts, tri, lo)
    S = build_polyhedral(mesh, name=f"convex_plane_{seed}", provenance="catalog")
    S.planar_positions = pts
    return S


NAMED = {
    "cube": cube,
    "tetrahedron": tetrahedron,
    "box": box,
    "doubled_square": doubled_square,
    "doubled_triangle": doubled_triangle,
    "flat_square": flat_square,
    "sphere_mesh": sphere_mesh,
    "paraboloid_cap": paraboloid_cap,
    "random_convex_plane": random_convex_plane,
}
