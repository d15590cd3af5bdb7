"""Face-sequence unfolding ("windows") on polyhedral surfaces.

A window is one face sequence reached from a source point, stored as the
face it ends in, the image ``s`` of the source in that face's chart and the
cone of directions (rays from ``s`` through the interval ``[p, q]`` of the
entry edge) along which straight segments from the source stay inside the
unfolded strip.  Every straight segment of length ``< r_max`` that starts at
the source and avoids vertices ends inside exactly one window, so the
windows with lower bound ``< r_max`` give exact intrinsic distances on
surfaces whose shortest paths do not bend at vertices (all cone angles at
most 2*pi, boundary angles at most pi).  Saddle vertices and reflex boundary
vertices are handled by restarting the propagation from them (relay).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetExceeded
from ..geometry.types import EPS_MEM, SurfacePoint

DEFAULT_BUDGET = 100_000
# angular slack of cone membership tests
CONE_TOL = 1e-12


def _apply(T, x, y):
    return T[0] * x + T[1] * y + T[4], T[2] * x + T[3] * y + T[5]


def _compose(T, M):
    """Rigid map T after M (both as (a, b, c, d, tx, ty))."""
    a, b, c, d = T[0] * M[0] + T[1] * M[2], T[0] * M[1] + T[1] * M[3], T[2] * M[0] + T[3] * M[2], T[2] * M[1] + T[3] * M[3]
    tx, ty = _apply(T, M[4], M[5])
    return (a, b, c, d, tx, ty)


IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def _seg_dist(sx, sy, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((sx - ax) * dx + (sy - ay) * dy) / L2))
    return math.hypot(ax + t * dx - sx, ay + t * dy - sy)


@dataclass
class Root:
    """Where the source sits in one incident face: chart point, skipped edges and tangent sector."""

    face: int
    xy: tuple[float, float]
    skip: tuple[int, ...]
    sector_start: float
    sector: float


def source_roots(surface, x: SurfacePoint, tol: float = EPS_MEM) -> list[Root]:
    """Incident faces of ``x`` (one for interior points, two on an edge, a fan at a vertex)."""
    f = int(x.face)
    P = surface.charts_py[f]
    X, Y = float(x.coords[0]), float(x.coords[1])
    for k in range(3):
        if math.hypot(X - P[k][0], Y - P[k][1]) <= tol:
            v = surface.faces_py[f][k]
            roots = []
            for g, c in sorted(surface.vertex_corners[v]):
                Q = surface.charts_py[g]
                a = Q[(c + 1) % 3]
                start = math.atan2(a[1] - Q[c][1], a[0] - Q[c][0])
                beta = float(surface.mesh.corner_angles[g, c])
                roots.append(Root(g, Q[c], (c, (c + 2) % 3), start, beta))
            return roots
    d = surface.edge_distances(f, (X, Y))
    for k in range(3):
        if d[k] <= tol:
            A, B = P[k], P[(k + 1) % 3]
            L = surface.len_py[f][k]
            t = ((X - A[0]) * (B[0] - A[0]) + (Y - A[1]) * (B[1] - A[1])) / (L * L)
            px, py = A[0] + t * (B[0] - A[0]), A[1] + t * (B[1] - A[1])
            start = math.atan2(B[1] - A[1], B[0] - A[0])
            roots = [Root(f, (px, py), (k,), start, math.pi)]
            g, j = surface.twins_py[f][k]
            if g >= 0:
                T = surface.trans_py[f][k]
                qx, qy = _apply(T, px, py)
                Q = surface.charts_py[g]
                A2, B2 = Q[j], Q[(j + 1) % 3]
                roots.append(Root(g, (qx, qy), (j,), math.atan2(B2[1] - A2[1], B2[0] - A2[0]), math.pi))
            return roots
    return [Root(f, (X, Y), (), 0.0, 2.0 * math.pi)]


@dataclass
class WindowSet:
    """All windows from one source (plus relayed sources) with lower bound below ``r_max``."""

    surface: object
    r_max: float
    roots: list
    face: np.ndarray
    s: np.ndarray
    p: np.ndarray
    q: np.ndarray
    full: np.ndarray
    root: np.ndarray
    maps: np.ndarray
    offset: np.ndarray
    lb: np.ndarray
    parent: np.ndarray
    entry: np.ndarray
    boundary_touch: float = math.inf
    relay_used: tuple = ()
    _by_face: dict = field(default=None, repr=False)

    def __len__(self):
        return len(self.face)

    @property
    def by_face(self) -> dict:
        if self._by_face is None:
            d = {}
            for i, f in enumerate(self.face.tolist()):
                d.setdefault(f, []).append(i)
            self._by_face = {f: np.array(v, dtype=np.int64) for f, v in d.items()}
        return self._by_face

    def faces(self) -> np.ndarray:
        return np.unique(self.face)

    def face_sequence(self, w: int) -> tuple[int, ...]:
        seq = []
        while w >= 0:
            seq.append(int(self.face[w]))
            w = int(self.parent[w])
        return tuple(reversed(seq))

    # ------------------------------------------------------------ membership
    def _cone_ok(self, idx, yx, yy):
        """Boolean matrix (len(idx), len(y)): query point inside each window's cone."""
        sx, sy = self.s[idx, 0][:, None], self.s[idx, 1][:, None]
        ux, uy = yx[None, :] - sx, yy[None, :] - sy
        px, py = self.p[idx, 0][:, None] - sx, self.p[idx, 1][:, None] - sy
        qx, qy = self.q[idx, 0][:, None] - sx, self.q[idx, 1][:, None] - sy
        nu = np.hypot(ux, uy)
        c1 = px * uy - py * ux
        c2 = ux * qy - uy * qx
        ok = (c1 >= -CONE_TOL * np.hypot(px, py) * nu) & (c2 >= -CONE_TOL * np.hypot(qx, qy) * nu)
        return ok | self.full[idx][:, None]

    def distances(self, faces, coords, return_window: bool = False):
        """Shortest distance (inf beyond r_max) from the source to chart points ``(faces, coords)``."""
        faces = np.asarray(faces, dtype=np.int64).reshape(-1)
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        out = np.full(len(faces), np.inf)
        win = np.full(len(faces), -1, dtype=np.int64)
        bf = self.by_face
        order = np.argsort(faces, kind="stable")
        fs = faces[order]
        cuts = np.flatnonzero(np.diff(fs)) + 1
        for grp in np.split(order, cuts):
            if len(grp) == 0:
                continue
            f = int(faces[grp[0]])
            idx = bf.get(f)
            if idx is None:
                continue
            yx, yy = coords[grp, 0], coords[grp, 1]
            ok = self._cone_ok(idx, yx, yy)
            d = np.hypot(yx[None, :] - self.s[idx, 0][:, None], yy[None, :] - self.s[idx, 1][:, None])
            d = np.where(ok, d + self.offset[idx][:, None], np.inf)
            j = np.argmin(d, axis=0)
            out[grp] = d[j, np.arange(len(grp))]
            win[grp] = idx[j]
        out[out >= self.r_max] = np.inf
        if return_window:
            return out, win
        return out

    def vertex_distances(self) -> dict[int, float]:
        """Distances to every vertex reached by some window (strictly below r_max)."""
        surf = self.surface
        best: dict[int, float] = {}
        for f, idx in self.by_face.items():
            P = np.array(surf.charts_py[f])
            ok = self._cone_ok(idx, P[:, 0], P[:, 1])
            d = np.hypot(P[None, :, 0] - self.s[idx, 0][:, None], P[None, :, 1] - self.s[idx, 1][:, None])
            d = np.where(ok, d + self.offset[idx][:, None], np.inf).min(axis=0)
            for k, v in enumerate(surf.faces_py[f]):
                if d[k] < best.get(v, math.inf):
                    best[v] = float(d[k])
        return {v: d for v, d in best.items() if d < self.r_max}

    def distance_to_faces(self, face_ids) -> float:
        """Distance from the source to a set of faces (min window lower bound)."""
        fs = set(int(f) for f in face_ids)
        m = np.array([f in fs for f in self.face.tolist()], dtype=bool)
        return float(self.lb[m].min()) if m.any() else math.inf

    def edge_ball_intervals(self, R: float) -> dict[int, list[tuple[float, float]]]:
        """For each edge id, parameter intervals (from the edge's first corner) lying in B(source, R)."""
        surf = self.surface
        out: dict[int, list] = {}
        for w in range(len(self)):
            f = int(self.face[w])
            rad = R - self.offset[w]
            if rad <= 0:
                continue
            P = surf.charts_py[f]
            sx, sy = self.s[w]
            for k in range(3):
                A, B = P[k], P[(k + 1) % 3]
                lo, hi = self._edge_cone_interval(w, A, B)
                if hi <= lo:
                    continue
                # |A + t(B-A) - s| < rad
                dx, dy = B[0] - A[0], B[1] - A[1]
                ax, ay = A[0] - sx, A[1] - sy
                a2 = dx * dx + dy * dy
                b1 = ax * dx + ay * dy
                c0 = ax * ax + ay * ay - rad * rad
                disc = b1 * b1 - a2 * c0
                if disc <= 0:
                    continue
                sq = math.sqrt(disc)
                t0, t1 = max(lo, (-b1 - sq) / a2), min(hi, (-b1 + sq) / a2)
                if t1 <= t0:
                    continue
                e = surf.edge_py[f][k]
                # express in the orientation of the edge's canonical (f, k) record
                ef, ek = int(surf.mesh.edges[e, 0]), int(surf.mesh.edges[e, 1])
                if (ef, ek) != (f, k):
                    t0, t1 = 1.0 - t1, 1.0 - t0
                out.setdefault(e, []).append((t0, t1))
        return out

    def _edge_cone_interval(self, w, A, B):
        if self.full[w]:
            return 0.0, 1.0
        sx, sy = self.s[w]
        px, py = self.p[w, 0] - sx, self.p[w, 1] - sy
        qx, qy = self.q[w, 0] - sx, self.q[w, 1] - sy
        return _cone_interval(px, py, qx, qy, A[0] - sx, A[1] - sy, B[0] - A[0], B[1] - A[1], slack=1e-12)


def _cone_interval(px, py, qx, qy, ax, ay, dx, dy, slack=0.0):
    """Parameters t in [0, 1] with A + t D inside the cone spanned by rays p, q (all relative to s)."""
    lo, hi = 0.0, 1.0
    for c0, c1 in ((px * ay - py * ax, px * dy - py * dx), (ax * qy - ay * qx, dx * qy - dy * qx)):
        tol = slack * (abs(c0) + abs(c1))
        if c1 > 0:
            lo = max(lo, (-c0 - tol) / c1)
        elif c1 < 0:
            hi = min(hi, (-c0 - tol) / c1)
        elif c0 < -tol:
            return 1.0, 0.0
    return lo, hi


def propagate(surface, x: SurfacePoint, r_max: float, budget: int = DEFAULT_BUDGET, *,
              offset: float = 0.0, stop_at=None) -> WindowSet:
    """Enumerate windows from ``x`` whose lower bound is below ``r_max``.

    ``stop_at`` optionally gives a list of (face, (x, y)) query points; the
    search then also prunes windows that cannot beat the best distance found
    so far (heap order by lower bound).
    """
    roots = source_roots(surface, x)
    charts, twins, trans, lens = surface.charts_py, surface.twins_py, surface.trans_py, surface.len_py
    W_face, W_s, W_p, W_q, W_full, W_root, W_map, W_lb, W_par, W_entry = ([] for _ in range(10))
    skip_of = {}
    heap = []
    boundary_touch = math.inf

    def add(face, s, p, q, full, ri, M, lb, par, entry):
        W_face.append(face); W_s.append(s); W_p.append(p); W_q.append(q); W_full.append(full)
        W_root.append(ri); W_map.append(M); W_lb.append(lb); W_par.append(par); W_entry.append(entry)
        i = len(W_face) - 1
        heapq.heappush(heap, (lb, i))
        if len(W_face) > budget:
            raise BudgetExceeded(f"face-sequence budget {budget} exceeded (r_max={r_max})")
        return i

    for ri, rt in enumerate(roots):
        i = add(rt.face, rt.xy, rt.xy, rt.xy, True, ri, IDENTITY, offset, -1, -1)
        skip_of[i] = rt.skip

    targets = None
    best = math.inf
    if stop_at is not None:
        targets = {}
        for f, c in stop_at:
            targets.setdefault(int(f), []).append((float(c[0]), float(c[1])))

    while heap:
        lb, w = heapq.heappop(heap)
        if lb >= min(r_max, best):
            continue
        g = W_face[w]
        sx, sy = W_s[w]
        P = charts[g]
        full = W_full[w]
        if not full:
            px, py = W_p[w][0] - sx, W_p[w][1] - sy
            qx, qy = W_q[w][0] - sx, W_q[w][1] - sy
        if targets is not None and g in targets:
            for (yx, yy) in targets[g]:
                ux, uy = yx - sx, yy - sy
                nu = math.hypot(ux, uy)
                if not full:
                    if px * uy - py * ux < -CONE_TOL * math.hypot(px, py) * nu:
                        continue
                    if ux * qy - uy * qx < -CONE_TOL * math.hypot(qx, qy) * nu:
                        continue
                best = min(best, offset + nu)
        skip = skip_of.get(w, ()) if full else (W_entry[w],)
        for k in range(3):
            if k in skip:
                continue
            A, B = P[k], P[(k + 1) % 3]
            if full:
                lo, hi = 0.0, 1.0
            else:
                lo, hi = _cone_interval(px, py, qx, qy, A[0] - sx, A[1] - sy, B[0] - A[0], B[1] - A[1])
            if hi - lo <= 1e-13:
                continue
            zx0, zy0 = A[0] + lo * (B[0] - A[0]), A[1] + lo * (B[1] - A[1])
            zx1, zy1 = A[0] + hi * (B[0] - A[0]), A[1] + hi * (B[1] - A[1])
            nlb = offset + _seg_dist(sx, sy, zx0, zy0, zx1, zy1)
            h, j = twins[g][k]
            if h < 0:
                boundary_touch = min(boundary_touch, nlb)
                continue
            if nlb >= r_max:
                continue
            T = trans[g][k]
            s2 = _apply(T, sx, sy)
            a2 = _apply(T, zx0, zy0)
            b2 = _apply(T, zx1, zy1)
            if (a2[0] - s2[0]) * (b2[1] - s2[1]) - (a2[1] - s2[1]) * (b2[0] - s2[0]) < 0:
                a2, b2 = b2, a2
            add(h, s2, a2, b2, False, W_root[w], _compose(T, W_map[w]), nlb, w, j)

    n = len(W_face)
    return WindowSet(
        surface=surface, r_max=float(r_max), roots=roots,
        face=np.array(W_face, dtype=np.int64),
        s=np.array(W_s, dtype=float).reshape(n, 2),
        p=np.array(W_p, dtype=float).reshape(n, 2),
        q=np.array(W_q, dtype=float).reshape(n, 2),
        full=np.array(W_full, dtype=bool),
        root=np.array(W_root, dtype=np.int64),
        maps=np.array(W_map, dtype=float).reshape(n, 6),
        offset=np.full(n, float(offset)),
        lb=np.array(W_lb, dtype=float),
        parent=np.array(W_par, dtype=np.int64),
        entry=np.array(W_entry, dtype=np.int64),
        boundary_touch=boundary_touch,
    )


def merge(base: WindowSet, extra: list[WindowSet], relay_used) -> WindowSet:
    """Union of window sets (relay legs carry their path offsets)."""
    sets = [base] + list(extra)
    shift = np.cumsum([0] + [len(w) for w in sets[:-1]])

    def cat(name):
        return np.concatenate([getattr(w, name) for w in sets])

    parent = np.concatenate([np.where(w.parent >= 0, w.parent + sh, -1) for w, sh in zip(sets, shift)])
    return WindowSet(
        surface=base.surface, r_max=base.r_max, roots=base.roots,
        face=cat("face"), s=cat("s"), p=cat("p"), q=cat("q"), full=cat("full"),
        root=np.concatenate([base.root, *[np.full(len(w), -1) for w in extra]]).astype(np.int64),
        maps=cat("maps"), offset=cat("offset"), lb=cat("lb"), parent=parent, entry=cat("entry"),
        boundary_touch=min(w.boundary_touch for w in sets), relay_used=tuple(relay_used),
    )


def propagate_with_relay(surface, x: SurfacePoint, r_max: float, budget: int = DEFAULT_BUDGET) -> WindowSet:
    """Windows from ``x`` plus windows restarted at saddle / reflex-boundary vertices.

    Dijkstra over relay vertices: a vertex popped at distance ``d`` spawns a
    propagation of radius ``r_max`` carrying offset ``d``; the union of all
    window sets then yields ``min(direct, chains of legs)``.
    """
    base = propagate(surface, x, r_max, budget)
    if len(surface.relay_vertices) == 0:
        return base
    relay = set(int(v) for v in surface.relay_vertices)
    dist = {v: d for v, d in base.vertex_distances().items() if v in relay}
    heap = [(d, v) for v, d in dist.items()]
    heapq.heapify(heap)
    done = set()
    extra = []
    used = []
    spent = len(base)
    while heap:
        d, v = heapq.heappop(heap)
        if v in done or d > dist.get(v, math.inf):
            continue
        done.add(v)
        ws = propagate(surface, surface.vertex_point(v), r_max, budget - spent, offset=d)
        spent += len(ws)
        extra.append(ws)
        used.append(v)
        for u, du in ws.vertex_distances().items():
            if u in relay and u not in done and du < dist.get(u, math.inf):
                dist[u] = du
                heapq.heappush(heap, (du, u))
    return merge(base, extra, used)
