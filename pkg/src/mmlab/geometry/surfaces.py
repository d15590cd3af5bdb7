"""Surface backends: the analytic catalog and polyhedral surfaces.

Surfaces are immutable after construction.  The measure is always the
2-dimensional Hausdorff measure, so ``area`` and all deviation quantities are
taken with respect to it.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidParameter, MeshError
from .mesh import TWO_PI, PolyhedralMesh
from .types import EPS_MEM, SurfacePoint

ANGLE_TOL = 1e-9


class Surface:
    """Common interface of every metric-measure model space."""

    n = 2
    kind = "surface"
    has_boundary = False
    nonneg_curvature = True
    is_polyhedral = False

    def __init__(self, name: str | None = None, provenance: str = ""):
        self.metadata = {"name": name or self.kind, "provenance": provenance}

    @property
    def params(self) -> dict:
        return {}

    def total_area(self) -> float:
        return math.inf

    def feature_scale(self) -> float:
        """Length scale below which the local model is unambiguous (used for r schedules)."""
        return 1.0

    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": self.params,
                "flags": {"has_boundary": self.has_boundary, "nonneg_curvature": self.nonneg_curvature},
                "name": self.metadata["name"]}

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class Plane(Surface):
    kind = "plane"


class HalfPlane(Surface):
    """The closed upper half plane ``y >= 0``."""

    kind = "half_plane"
    has_boundary = True


class FlatTorus(Surface):
    kind = "flat_torus"

    def __init__(self, a: float = 1.0, b: float = 1.0, **kw):
        if not (a > 0 and b > 0):
            raise InvalidParameter("torus periods must be positive")
        super().__init__(**kw)
        self.a, self.b = float(a), float(b)

    @property
    def params(self):
        return {"a": self.a, "b": self.b}

    def total_area(self):
        return self.a * self.b

    def feature_scale(self):
        return 0.5 * min(self.a, self.b)

    def wrap(self, xy: np.ndarray) -> np.ndarray:
        out = np.array(xy, dtype=float)
        out[..., 0] = np.mod(out[..., 0], self.a)
        out[..., 1] = np.mod(out[..., 1], self.b)
        return out


class Sphere(Surface):
    kind = "sphere"

    def __init__(self, R: float = 1.0, **kw):
        if not R > 0:
            raise InvalidParameter("sphere radius must be positive")
        super().__init__(**kw)
        self.R = float(R)

    @property
    def params(self):
        return {"R": self.R}

    def total_area(self):
        return 4.0 * math.pi * self.R ** 2

    def feature_scale(self):
        return self.R

    def to_cartesian(self, coords: np.ndarray) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        th, ph = c[..., 0], c[..., 1]
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)

    @staticmethod
    def from_cartesian(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        th = np.arctan2(np.hypot(p[..., 0], p[..., 1]), p[..., 2])
        ph = np.mod(np.arctan2(p[..., 1], p[..., 0]), TWO_PI)
        return np.stack([th, ph], axis=-1)

    @staticmethod
    def frame(coords) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal (d/d colatitude, d/d longitude) frame at a point."""
        th, ph = float(coords[0]), float(coords[1])
        e1 = np.array([math.cos(th) * math.cos(ph), math.cos(th) * math.sin(ph), -math.sin(th)])
        e2 = np.array([-math.sin(ph), math.cos(ph), 0.0])
        return e1, e2


class Cone(Surface):
    """Euclidean cone over a circle of length ``rho``; apex at radius 0.

    Points are (radius, angle) with angle in ``[0, rho)``.
    """

    kind = "cone"

    def __init__(self, rho: float, **kw):
        if not (0 < rho <= TWO_PI + 1e-15):
            raise InvalidParameter("cone requires 0 < rho <= 2*pi (negative defects are out of scope)")
        super().__init__(**kw)
        self.rho = min(float(rho), TWO_PI)
        self.alpha = TWO_PI - self.rho

    @property
    def params(self):
        return {"rho": self.rho, "alpha": self.alpha}

    @property
    def apex(self) -> SurfacePoint:
        return SurfacePoint((0.0, 0.0))

    def develop(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        return np.stack([c[..., 0] * np.cos(c[..., 1]), c[..., 0] * np.sin(c[..., 1])], axis=-1)


def build_analytic(kind: str, **params) -> Surface:
    """Construct one of ``plane``, ``half_plane``, ``flat_torus``, ``sphere``, ``cone``."""
    name = params.pop("name", None)
    if kind == "plane":
        return Plane(name=name, provenance="analytic")
    if kind == "half_plane":
        return HalfPlane(name=name, provenance="analytic")
    if kind == "flat_torus":
        return FlatTorus(params.get("a", 1.0), params.get("b", 1.0), name=name, provenance="analytic")
    if kind == "sphere":
        return Sphere(params.get("R", 1.0), name=name, provenance="analytic")
    if kind == "cone":
        if "rho" in params:
            rho = params["rho"]
        elif "alpha" in params:
            rho = TWO_PI - params["alpha"]
        else:
            raise InvalidParameter("cone needs rho or alpha")
        return Cone(rho, name=name, provenance="analytic")
    raise InvalidParameter(f"unknown analytic surface kind {kind!r}")


class PolyhedralSurface(Surface):
    """Intrinsic metric of a triangle mesh.

    Besides the numpy arrays of the mesh, plain Python tuples of the face
    charts and gluing maps are kept for the scalar hot loops of geodesic
    tracing and unfolding.
    """

    kind = "polyhedral"
    is_polyhedral = True

    def __init__(self, mesh: PolyhedralMesh, name: str | None = None, provenance: str = ""):
        super().__init__(name=name or mesh.name, provenance=provenance)
        self.mesh = mesh
        self.has_boundary = mesh.has_boundary
        th = mesh.cone_angles
        interior = ~mesh.boundary_vertex
        self.saddle = interior & (th > TWO_PI + ANGLE_TOL)
        self.reflex_boundary = mesh.boundary_vertex & (th > math.pi + ANGLE_TOL)
        self.relay_vertices = np.flatnonzero(self.saddle | self.reflex_boundary)
        self.nonneg_curvature = not bool(self.saddle.any())
        self.locally_convex = len(self.relay_vertices) == 0
        self.singular_vertex = mesh.boundary_vertex | (np.abs(TWO_PI - th) > ANGLE_TOL)

        self.charts_py = [tuple(tuple(float(c) for c in P) for P in mesh.charts[f]) for f in range(mesh.n_faces)]
        self.twins_py = [tuple((int(g), int(j)) for g, j in mesh.twins[f]) for f in range(mesh.n_faces)]
        self.trans_py = [tuple(None if np.isnan(T[0]) else tuple(float(t) for t in T) for T in mesh.transitions[f])
                         for f in range(mesh.n_faces)]
        self.len_py = [tuple(float(x) for x in mesh.lengths[f]) for f in range(mesh.n_faces)]
        self.faces_py = [tuple(int(v) for v in mesh.faces[f]) for f in range(mesh.n_faces)]
        self.edge_py = [tuple(int(e) for e in mesh.edge_id[f]) for f in range(mesh.n_faces)]
        # faces incident to each vertex, with the corner index
        inc: list[list[tuple[int, int]]] = [[] for _ in range(mesh.n_vertices)]
        for f, tri in enumerate(self.faces_py):
            for k, v in enumerate(tri):
                inc[v].append((f, k))
        self.vertex_corners = inc
        # canonical face of each vertex and edge: the lowest incident face id
        self.vertex_face = np.array([min(f for f, _ in c) for c in inc], dtype=np.int64)
        self.edge_face = np.minimum(mesh.edges[:, 0], np.where(mesh.edges[:, 2] < 0, mesh.edges[:, 0], mesh.edges[:, 2]))

    @property
    def params(self):
        return {"n_vertices": self.mesh.n_vertices, "n_faces": self.mesh.n_faces,
                "convex_embedded": self.mesh.convex_embedded}

    @property
    def convex_embedded(self) -> bool:
        return self.mesh.convex_embedded

    def total_area(self):
        return float(self.mesh.face_area.sum())

    def feature_scale(self):
        return self.mesh.min_edge_length()

    def clearance(self) -> float:
        """Smallest corner altitude: every r-ball around a vertex with r below this stays in its star."""
        return float(self.mesh.corner_altitudes().min())

    # ----------------------------------------------------------- point tools
    def barycentric(self, face: int, xy) -> np.ndarray:
        P = self.mesh.charts[face]
        xy = np.asarray(xy, dtype=float)
        T = np.array([[P[1, 0] - P[0, 0], P[2, 0] - P[0, 0]], [P[1, 1] - P[0, 1], P[2, 1] - P[0, 1]]])
        lam12 = np.linalg.solve(T, (xy - P[0]).T).T
        return np.column_stack([1 - lam12[..., 0] - lam12[..., 1], lam12[..., 0], lam12[..., 1]]) if lam12.ndim == 2 \
            else np.array([1 - lam12[0] - lam12[1], lam12[0], lam12[1]])

    def edge_distances(self, face: int, xy) -> tuple[float, float, float]:
        """Signed distances from a chart point to the three edge lines (positive inside)."""
        P = self.charts_py[face]
        x, y = float(xy[0]), float(xy[1])
        out = []
        for k in range(3):
            ax, ay = P[k]
            bx, by = P[(k + 1) % 3]
            L = self.len_py[face][k]
            out.append(((bx - ax) * (y - ay) - (by - ay) * (x - ax)) / L)
        return tuple(out)

    def contains(self, face: int, xy, tol: float = EPS_MEM) -> bool:
        return min(self.edge_distances(face, xy)) >= -tol

    def canonicalize(self, p: SurfacePoint) -> SurfacePoint:
        """Move a point lying on a shared edge (within EPS_MEM) to the lowest face id."""
        f = int(p.face)
        xy = p.coords
        if not self.contains(f, xy):
            raise InvalidParameter(f"point {xy} is not inside face {f}")
        best_f, best_xy = f, xy
        stack = [(f, xy)]
        seen = {f}
        while stack:
            g, q = stack.pop()
            d = self.edge_distances(g, q)
            for k in range(3):
                if d[k] > EPS_MEM:
                    continue
                h, _ = self.twins_py[g][k]
                if h < 0 or h in seen:
                    continue
                T = self.trans_py[g][k]
                q2 = (T[0] * q[0] + T[1] * q[1] + T[4], T[2] * q[0] + T[3] * q[1] + T[5])
                seen.add(h)
                stack.append((h, q2))
                if h < best_f:
                    best_f, best_xy = h, q2
        return SurfacePoint((float(best_xy[0]), float(best_xy[1])), int(best_f))

    def vertex_point(self, v: int) -> SurfacePoint:
        f = int(self.vertex_face[v])
        k = self.faces_py[f].index(v)
        return SurfacePoint(self.charts_py[f][k], f)

    def at_vertex(self, p: SurfacePoint, tol: float = EPS_MEM) -> int | None:
        P = self.charts_py[p.face]
        for k in range(3):
            if math.hypot(p.coords[0] - P[k][0], p.coords[1] - P[k][1]) <= tol:
                return self.faces_py[p.face][k]
        return None

    def face_centroid_point(self, face: int) -> SurfacePoint:
        P = self.mesh.charts[face]
        c = P.mean(axis=0)
        return SurfacePoint((float(c[0]), float(c[1])), int(face))

    def to_ambient(self, face, xy) -> np.ndarray:
        """Ambient position of chart points (requires mesh positions)."""
        if self.mesh.positions is None:
            raise MeshError("mesh has no ambient positions")
        face = np.atleast_1d(np.asarray(face, dtype=np.int64))
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        out = np.empty((len(face), self.mesh.positions.shape[1]))
        for f in np.unique(face):
            m = face == f
            lam = np.atleast_2d(self.barycentric(int(f), xy[m]))
            out[m] = lam @ self.mesh.positions[self.mesh.faces[f]]
        return out


def build_polyhedral(mesh: PolyhedralMesh, name: str | None = None, provenance: str = "mesh") -> PolyhedralSurface:
    """Validate a mesh and wrap it as a surface (validation happens in the mesh constructor)."""
    return PolyhedralSurface(mesh, name=name, provenance=provenance)


def polyhedral_from_positions(positions, faces, name: str = "mesh", **kw) -> PolyhedralSurface:
    return build_polyhedral(PolyhedralMesh.from_positions(positions, faces, name=name, **kw), name=name)
