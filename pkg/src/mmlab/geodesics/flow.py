"""Event-driven geodesic flow and the exponential map."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import FlowUndefined, InvalidParameter, UnsupportedBackend
from ..geometry.surfaces import Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface
from ..geometry.types import EPS_MEM, SurfacePoint, TangentVector

COMPLETED = "completed"
VERTEX_HIT = "vertex_hit"
BOUNDARY_HIT = "boundary_hit"
BUDGET_EXCEEDED = "budget_exceeded"

MAX_EVENTS = 1_000_000
VERTEX_EPS = 1e-10


@dataclass(frozen=True)
class Event:
    """One edge crossing; position and direction are in the chart of the face entered."""

    index: int
    time: float
    face: int
    edge: int
    param: float
    x: float
    y: float
    dir_x: float
    dir_y: float


@dataclass
class FlowResult:
    status: str
    end: TangentVector | None
    events: list[Event] = field(default_factory=list)
    time_elapsed: float = 0.0
    face_sequence: tuple[int, ...] = ()

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


def _flow_polyhedral(S: PolyhedralSurface, v: TangentVector, t: float, max_events: int) -> FlowResult:
    f = int(v.base.face)
    x, y = float(v.base.coords[0]), float(v.base.coords[1])
    dx, dy = float(v.direction[0]), float(v.direction[1])
    speed = v.norm
    remaining = t * speed
    travelled = 0.0
    entry = -1
    events: list[Event] = []
    seq = [f]
    charts, twins, trans, lens = S.charts_py, S.twins_py, S.trans_py, S.len_py
    while True:
        P = charts[f]
        best, kbest = math.inf, -1
        for k in range(3):
            if k == entry:
                continue
            ax, ay = P[k]
            bx, by = P[(k + 1) % 3]
            L = lens[f][k]
            ex, ey = (bx - ax) / L, (by - ay) / L
            # inward normal is (-ey, ex); distance inside is positive
            dist = ex * (y - ay) - ey * (x - ax)
            rate = -(ex * dy - ey * dx)
            if rate > 0:
                tk = max(dist, 0.0) / rate
                if tk < best:
                    best, kbest = tk, k
        if kbest < 0 or best >= remaining:
            x += remaining * dx
            y += remaining * dy
            travelled += remaining
            break
        x += best * dx
        y += best * dy
        remaining -= best
        travelled += best
        k = kbest
        ax, ay = P[k]
        bx, by = P[(k + 1) % 3]
        L = lens[f][k]
        u = ((x - ax) * (bx - ax) + (y - ay) * (by - ay)) / (L * L)
        u = min(max(u, 0.0), 1.0)
        time = travelled / speed
        eps = VERTEX_EPS * L
        if u * L <= eps or (1.0 - u) * L <= eps:
            return FlowResult(VERTEX_HIT, None, events, time, tuple(seq))
        g, j = twins[f][k]
        if g < 0:
            return FlowResult(BOUNDARY_HIT, None, events, time, tuple(seq))
        # snap onto the edge before changing charts
        x, y = ax + u * (bx - ax), ay + u * (by - ay)
        T = trans[f][k]
        x, y = T[0] * x + T[1] * y + T[4], T[2] * x + T[3] * y + T[5]
        dx, dy = T[0] * dx + T[1] * dy, T[2] * dx + T[3] * dy
        nrm = math.hypot(dx, dy)
        if abs(nrm - 1.0) > 1e-12:
            raise AssertionError(f"direction drift {nrm - 1.0:.3e} at event {len(events)}")
        dx, dy = dx / nrm, dy / nrm
        f, entry = g, j
        seq.append(f)
        events.append(Event(len(events), time, f, S.edge_py[f][j], u, x, y, dx, dy))
        if len(events) >= max_events:
            return FlowResult(BUDGET_EXCEEDED, None, events, time, tuple(seq))
    # canonical face for end points lying on an edge
    for _ in range(8):
        moved = False
        d = S.edge_distances(f, (x, y))
        for k in range(3):
            g, j = twins[f][k]
            if d[k] <= EPS_MEM and 0 <= g < f:
                T = trans[f][k]
                x, y = T[0] * x + T[1] * y + T[4], T[2] * x + T[3] * y + T[5]
                dx, dy = T[0] * dx + T[1] * dy, T[2] * dx + T[3] * dy
                f = g
                moved = True
                break
        if not moved:
            break
    nrm = math.hypot(dx, dy)
    end = TangentVector(SurfacePoint((x, y), f), (dx / nrm, dy / nrm), v.norm)
    return FlowResult(COMPLETED, end, events, travelled / speed, tuple(seq))


def _flow_analytic(S: Surface, v: TangentVector, t: float) -> FlowResult:
    L = t * v.norm
    x, y = v.base.coords
    dx, dy = v.direction
    if isinstance(S, Plane):
        return FlowResult(COMPLETED, TangentVector(SurfacePoint((x + L * dx, y + L * dy)), (dx, dy), v.norm), [], t)
    if isinstance(S, HalfPlane):
        if dy < 0 and y + L * dy < 0:
            return FlowResult(BOUNDARY_HIT, None, [], (y / -dy) / v.norm)
        return FlowResult(COMPLETED, TangentVector(SurfacePoint((x + L * dx, y + L * dy)), (dx, dy), v.norm), [], t)
    if isinstance(S, FlatTorus):
        p = SurfacePoint((float(np.mod(x + L * dx, S.a)), float(np.mod(y + L * dy, S.b))))
        return FlowResult(COMPLETED, TangentVector(p, (dx, dy), v.norm), [], t)
    if isinstance(S, Sphere):
        p = S.to_cartesian(np.array([x, y]))
        e1, e2 = S.frame((x, y))
        u = dx * e1 + dy * e2
        a = L / S.R
        p2 = math.cos(a) * p + math.sin(a) * u
        u2 = -math.sin(a) * p + math.cos(a) * u
        c = S.from_cartesian(p2)
        if math.sin(c[0]) < 1e-12:
            return FlowResult(VERTEX_HIT, None, [], t)
        f1, f2 = S.frame(c)
        w = np.array([u2 @ f1, u2 @ f2])
        w /= np.hypot(*w)
        return FlowResult(COMPLETED, TangentVector(SurfacePoint((float(c[0]), float(c[1]))),
                                                   (float(w[0]), float(w[1])), v.norm), [], t)
    if isinstance(S, Cone):
        a, psi = x, y
        P = np.array([a, 0.0])
        D = np.array([dx, dy])  # (radial, angular) components at angle 0 of the development
        Q = P + L * D
        # closest approach of the segment to the apex
        s_star = -P @ D
        if 0.0 <= s_star <= L and abs(P[0] * D[1] - P[1] * D[0]) <= VERTEX_EPS * max(a, 1.0):
            return FlowResult(VERTEX_HIT, None, [], s_star / v.norm)
        b = float(np.hypot(*Q))
        if b <= VERTEX_EPS * max(a, 1.0):
            return FlowResult(VERTEX_HIT, None, [], t)
        sweep = math.atan2(P[0] * Q[1] - P[1] * Q[0], P @ Q)
        ang = float(np.mod(psi + sweep, S.rho))
        er = Q / b
        dr = float(D @ er)
        dt = float(er[0] * D[1] - er[1] * D[0])
        n = math.hypot(dr, dt)
        return FlowResult(COMPLETED, TangentVector(SurfacePoint((b, ang)), (dr / n, dt / n), v.norm), [], t)
    raise UnsupportedBackend(f"no flow for {type(S).__name__}")


def flow(surface: Surface, v: TangentVector, t: float, max_events: int = MAX_EVENTS) -> FlowResult:
    """phi_t(v): transport v along its geodesic for time t (distance t*|v|)."""
    t = float(t)
    if t < 0:
        res = flow(surface, -v, -t, max_events)
        if res.completed:
            res.end = -res.end
        return res
    if v.norm == 0.0 or t == 0.0:
        return FlowResult(COMPLETED, v, [], t)
    if isinstance(surface, PolyhedralSurface):
        return _flow_polyhedral(surface, v, t, max_events)
    return _flow_analytic(surface, v, t)


def exp_map(surface: Surface, v: TangentVector) -> SurfacePoint:
    """gamma_v(1); raises FlowUndefined with the flow status when tracing fails."""
    if not v.norm > 0:
        raise InvalidParameter("exp_map needs |v| > 0")
    if isinstance(surface, PolyhedralSurface) and surface.at_vertex(v.base) is not None:
        raise InvalidParameter("exp_map is not defined at a vertex base point")
    res = flow(surface, v, 1.0)
    if not res.completed:
        raise FlowUndefined(res.status, f"exp_map failed: {res.status} at time {res.time_elapsed:.6g}")
    return res.end.base


def events_to_csv(result: FlowResult, path) -> None:
    """Write the event log with columns (event_index, time, face_id, edge_id, x, y, dir_x, dir_y)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event_index", "time", "face_id", "edge_id", "x", "y", "dir_x", "dir_y"])
        for e in result.events:
            w.writerow([e.index, repr(e.time), e.face, e.edge, repr(e.x), repr(e.y), repr(e.dir_x), repr(e.dir_y)])
