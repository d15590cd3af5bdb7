"""Triangle meshes with an intrinsic (edge-length) metric.

A :class:`PolyhedralMesh` stores faces as vertex-id triples together with one
length per edge.  Local edge ``k`` of a face runs from corner ``k`` to corner
``k + 1`` (mod 3).  Adjacency is half-edge style: ``twins[f, k] = (g, j)``
names the face and local edge glued to edge ``k`` of ``f``, or ``(-1, -1)``
on the boundary.

Each face gets an isometric planar chart: corner 0 at the origin, corner 1 on
the positive x-axis and corner 2 in the upper half plane.  Gluing two faces
along an edge is the rigid motion between their charts (``transitions``).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..errors import MeshError

TWO_PI = 2.0 * np.pi


def _corner_angle(a: float, b: float, c: float) -> float:
    """Angle opposite side ``c`` in a triangle with sides ``a, b, c`` (Kahan's formula)."""
    # sort so that x >= y >= z for the numerically stable variant
    x, y = max(a, b), min(a, b)
    z = c
    if y >= z:
        mu = z - (x - y)
    else:
        mu = y - (x - z)
    num = ((x - y) + z) * mu
    den = (x + (y + z)) * ((x - z) + y)
    if den <= 0.0:
        return np.pi
    return 2.0 * np.arctan(np.sqrt(max(num, 0.0) / den))


@dataclass(eq=False)
class PolyhedralMesh:
    """Connectivity plus intrinsic edge lengths of a triangulated surface.

    Parameters
    ----------
    faces : (F, 3) int array
    lengths : (F, 3) float array, ``lengths[f, k]`` is the length of local edge k.
    n_vertices : int
    positions : optional (V, 3) ambient coordinates.
    twins : optional (F, 3, 2) int array of glued (face, local edge) pairs.
        Derived from shared vertex pairs when omitted.
    convex_embedded : flag that ``positions`` bound a convex body.
    """

    faces: np.ndarray
    lengths: np.ndarray
    n_vertices: int
    positions: np.ndarray | None = None
    twins: np.ndarray | None = None
    convex_embedded: bool = False
    name: str = "mesh"

    # derived
    charts: np.ndarray = field(init=False, repr=False)
    corner_angles: np.ndarray = field(init=False, repr=False)
    cone_angles: np.ndarray = field(init=False, repr=False)
    boundary_vertex: np.ndarray = field(init=False, repr=False)
    edge_id: np.ndarray = field(init=False, repr=False)
    edges: np.ndarray = field(init=False, repr=False)
    transitions: np.ndarray = field(init=False, repr=False)
    face_area: np.ndarray = field(init=False, repr=False)

    @classmethod
    def from_positions(cls, positions, faces, *, twins=None, convex_embedded=False, name="mesh"):
        pos = np.asarray(positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise MeshError("positions must be an (V, 2) or (V, 3) array")
        if pos.shape[1] == 2:
            pos = np.column_stack([pos, np.zeros(len(pos))])
        fc = np.asarray(faces, dtype=np.int64)
        if fc.ndim != 2 or fc.shape[1] != 3:
            raise MeshError("faces must be an (F, 3) array of vertex ids")
        if fc.size and (fc.min() < 0 or fc.max() >= len(pos)):
            raise MeshError("face references a vertex id that does not exist")
        a = pos[fc]
        lengths = np.linalg.norm(a[:, [1, 2, 0]] - a, axis=2)
        return cls(fc, lengths, len(pos), positions=pos, twins=twins,
                   convex_embedded=convex_embedded, name=name)

    def __post_init__(self):
        self.faces = np.asarray(self.faces, dtype=np.int64)
        self.lengths = np.array(self.lengths, dtype=float)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3 or len(self.faces) == 0:
            raise MeshError("faces must be a non-empty (F, 3) array")
        if self.lengths.shape != self.faces.shape:
            raise MeshError("lengths must have the same shape as faces")
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise MeshError("face references a vertex id that does not exist")
        f = self.faces
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise MeshError("degenerate face with a repeated vertex")
        if not np.all(np.isfinite(self.lengths)) or np.any(self.lengths <= 0):
            raise MeshError("edge lengths must be positive and finite")
        self._check_triangle_inequality()
        if self.twins is None:
            self.twins = self._derive_twins()
        else:
            self.twins = np.asarray(self.twins, dtype=np.int64).reshape(len(f), 3, 2)
        self._check_twins()
        self._check_connected()
        self._build_charts()
        self._check_vertex_fans()
        self._build_edges()
        self._build_transitions()

    # ------------------------------------------------------------------ checks
    def _check_triangle_inequality(self):
        l = self.lengths
        bad = (l[:, 0] >= l[:, 1] + l[:, 2]) | (l[:, 1] >= l[:, 2] + l[:, 0]) | (l[:, 2] >= l[:, 0] + l[:, 1])
        if np.any(bad):
            raise MeshError(f"triangle inequality violated in faces {np.flatnonzero(bad)[:10].tolist()}")

    def _derive_twins(self):
        owners = defaultdict(list)
        for fi, tri in enumerate(self.faces):
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                owners[(min(a, b), max(a, b))].append((fi, k))
        twins = -np.ones((len(self.faces), 3, 2), dtype=np.int64)
        for key, lst in owners.items():
            if len(lst) > 2:
                raise MeshError(f"non-manifold edge {key} shared by {len(lst)} faces")
            if len(lst) == 2:
                (f0, k0), (f1, k1) = lst
                twins[f0, k0] = (f1, k1)
                twins[f1, k1] = (f0, k0)
        return twins

    def _check_twins(self):
        t = self.twins
        f = self.faces
        for fi in range(len(f)):
            for k in range(3):
                g, j = t[fi, k]
                if g < 0:
                    continue
                if t[g, j, 0] != fi or t[g, j, 1] != k:
                    raise MeshError(f"adjacency is not symmetric at face {fi} edge {k}")
                ends_f = {int(f[fi, k]), int(f[fi, (k + 1) % 3])}
                ends_g = {int(f[g, j]), int(f[g, (j + 1) % 3])}
                if ends_f != ends_g:
                    raise MeshError(f"glued edges at face {fi} edge {k} have different endpoints")
                la, lb = self.lengths[fi, k], self.lengths[g, j]
                if abs(la - lb) > 1e-12 * max(la, lb):
                    raise MeshError(f"glued edges at face {fi} edge {k} have different lengths")
                # one exact value per glued pair
                self.lengths[g, j] = la if (fi, k) < (g, j) else lb

    def _check_connected(self):
        seen = np.zeros(len(self.faces), dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            fi = stack.pop()
            for k in range(3):
                g = self.twins[fi, k, 0]
                if g >= 0 and not seen[g]:
                    seen[g] = True
                    stack.append(g)
        if not seen.all():
            raise MeshError("mesh is not connected")

    def _check_vertex_fans(self):
        """Corners around each vertex must form one fan (a cycle, or a chain at the boundary)."""
        f = self.faces
        corners = defaultdict(list)
        for fi in range(len(f)):
            for k in range(3):
                corners[int(f[fi, k])].append((fi, k))
        used = np.zeros(self.n_vertices, dtype=bool)
        boundary = np.zeros(self.n_vertices, dtype=bool)
        for v, lst in corners.items():
            used[v] = True
            members = set(lst)
            # walk from one corner across the edges incident to v
            start = lst[0]
            seen = {start}
            stack = [start]
            n_boundary_edges = 0
            while stack:
                fi, k = stack.pop()
                for le in (k, (k + 2) % 3):
                    g, j = self.twins[fi, le]
                    if g < 0:
                        n_boundary_edges += 1
                        continue
                    c = (int(g), j if f[g, j] == v else (j + 1) % 3)
                    if c not in members:
                        raise MeshError(f"inconsistent corner structure at vertex {v}")
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
            if len(seen) != len(members):
                raise MeshError(f"non-manifold vertex {v}: corners form several fans")
            if n_boundary_edges not in (0, 2):
                raise MeshError(f"non-manifold vertex {v}: {n_boundary_edges} boundary edges")
            boundary[v] = n_boundary_edges == 2
        if not used.all():
            raise MeshError("mesh has isolated vertices")
        self.boundary_vertex = boundary

    # ---------------------------------------------------------------- geometry
    def _build_charts(self):
        l = self.lengths
        l0, l1, l2 = l[:, 0], l[:, 1], l[:, 2]
        x2 = (l0 ** 2 + l2 ** 2 - l1 ** 2) / (2 * l0)
        y2 = np.sqrt(np.maximum(l2 ** 2 - x2 ** 2, 0.0))
        charts = np.zeros((len(l), 3, 2))
        charts[:, 1, 0] = l0
        charts[:, 2, 0] = x2
        charts[:, 2, 1] = y2
        self.charts = charts
        self.face_area = 0.5 * l0 * y2
        ang = np.empty_like(l)
        for fi in range(len(l)):
            a, b, c = l[fi]
            # corner k lies between edges k and k-1, opposite edge k+1
            ang[fi, 0] = _corner_angle(a, c, b)
            ang[fi, 1] = _corner_angle(a, b, c)
            ang[fi, 2] = _corner_angle(b, c, a)
        self.corner_angles = ang
        cone = np.zeros(self.n_vertices)
        np.add.at(cone, self.faces.ravel(), ang.ravel())
        self.cone_angles = cone

    def _build_edges(self):
        eid = -np.ones((len(self.faces), 3), dtype=np.int64)
        edges = []
        for fi in range(len(self.faces)):
            for k in range(3):
                if eid[fi, k] >= 0:
                    continue
                eid[fi, k] = len(edges)
                g, j = self.twins[fi, k]
                if g >= 0:
                    eid[g, j] = len(edges)
                edges.append((fi, k, g, j))
        self.edge_id = eid
        self.edges = np.array(edges, dtype=np.int64)

    def _build_transitions(self):
        """Rigid motion (a, b, c, d, tx, ty) from the chart of f to the chart of its twin across k."""
        F = len(self.faces)
        tr = np.full((F, 3, 6), np.nan)
        f = self.faces
        ch = self.charts
        for fi in range(F):
            for k in range(3):
                g, j = self.twins[fi, k]
                if g < 0:
                    continue
                va, vb = f[fi, k], f[fi, (k + 1) % 3]
                pa, pb = ch[fi, k], ch[fi, (k + 1) % 3]
                if f[g, j] == va:
                    qa, qb = ch[g, j], ch[g, (j + 1) % 3]
                else:
                    qa, qb = ch[g, (j + 1) % 3], ch[g, j]
                u = (pb - pa) / np.hypot(*(pb - pa))
                w = (qb - qa) / np.hypot(*(qb - qa))
                cs = u[0] * w[0] + u[1] * w[1]
                sn = u[0] * w[1] - u[1] * w[0]
                M = np.array([[cs, -sn], [sn, cs]])
                third_f = M @ (ch[fi, (k + 2) % 3] - pa) + qa
                third_g = ch[g, (j + 2) % 3]
                side_f = w[0] * (third_f[1] - qa[1]) - w[1] * (third_f[0] - qa[0])
                side_g = w[0] * (third_g[1] - qa[1]) - w[1] * (third_g[0] - qa[0])
                if side_f * side_g > 0:
                    H = 2.0 * np.outer(w, w) - np.eye(2)
                    M = H @ M
                t = qa - M @ pa
                tr[fi, k] = (M[0, 0], M[0, 1], M[1, 0], M[1, 1], t[0], t[1])
        self.transitions = tr

    # ------------------------------------------------------------- properties
    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def boundary_edge(self) -> np.ndarray:
        return self.edges[:, 2] < 0

    @property
    def has_boundary(self) -> bool:
        return bool(np.any(self.edges[:, 2] < 0))

    @property
    def interior_vertex(self) -> np.ndarray:
        return ~self.boundary_vertex

    @property
    def defects(self) -> np.ndarray:
        """Angle defect 2*pi - theta_v at interior vertices, 0 at boundary vertices."""
        return np.where(self.boundary_vertex, 0.0, TWO_PI - self.cone_angles)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    def recompute_cone_angles(self) -> np.ndarray:
        """Cone angles from chart coordinates (independent of the side-length formula)."""
        cone = np.zeros(self.n_vertices)
        for fi in range(self.n_faces):
            P = self.charts[fi]
            for k in range(3):
                a = P[(k + 1) % 3] - P[k]
                b = P[(k + 2) % 3] - P[k]
                cone[self.faces[fi, k]] += np.arctan2(abs(a[0] * b[1] - a[1] * b[0]), a @ b)
        return cone

    def min_edge_length(self) -> float:
        return float(self.lengths.min())

    def corner_altitudes(self) -> np.ndarray:
        """Distance from each corner to the opposite side, shape (F, 3)."""
        opp = self.lengths[:, [1, 2, 0]]
        return 2.0 * self.face_area[:, None] / opp
