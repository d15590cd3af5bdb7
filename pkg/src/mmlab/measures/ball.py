"""Ball volumes b_r(x) = H^2(B(x, r)).

Polyhedral backends offer two unbiased Monte Carlo estimators:

* ``superset``: uniform points on a set of face pieces known to contain the
  ball (reached faces clipped to boxes around the source images), classified
  by exact distance.  b = hits / n * area(superset).
* ``pullback``: uniform tangent vectors w in the r-disk at x; the geodesic of
  w is traced through the windows and counted when it is minimizing.  The
  exponential map is a local isometry and a.e. injective on the minimizing
  set, so b = (Theta / 2) r^2 * P(minimizing), Theta the total angle at x.
  Valid when shortest paths never bend at vertices (no saddle vertex, no
  reflex boundary vertex).  When the ball is certified to be a flat disk the
  answer is exact.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidParameter, UnsupportedBackend
from ..estimate import EstimatorConfig, MeasureEstimate
from ..geodesics.distance import analytic_distances
from ..geodesics.unfold import WindowSet, propagate, propagate_with_relay
from ..geometry.sampling import analytic_superset, window_superset
from ..geometry.surfaces import Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface
from ..geometry.types import SurfacePoint
from ..rng import substream
from .cone import cone_ball_area, segment_area

TAG_BALL = 21


def analytic_ball_area(surface: Surface, x, r: float):
    """Closed-form b_r at coordinates ``x`` (rows of an (N, 2) array or one point)."""
    x = np.asarray(x, dtype=float)
    one = x.ndim == 1
    X = x.reshape(-1, 2)
    if isinstance(surface, Plane):
        out = np.full(len(X), math.pi * r * r)
    elif isinstance(surface, HalfPlane):
        out = math.pi * r * r - segment_area(X[:, 1], r)
    elif isinstance(surface, FlatTorus):
        out = np.full(len(X), 4.0 * _quarter_disk_box(r, surface.a / 2, surface.b / 2))
    elif isinstance(surface, Sphere):
        ang = min(r / surface.R, math.pi)
        out = np.full(len(X), 2 * math.pi * surface.R ** 2 * (1 - math.cos(ang)))
    elif isinstance(surface, Cone):
        out = np.asarray(cone_ball_area(surface.rho, X[:, 0], r), dtype=float).reshape(-1)
    else:
        raise UnsupportedBackend(f"no closed-form ball area for {type(surface).__name__}")
    return float(out[0]) if one else out


def _quarter_disk_box(r, u, w):
    """Area of {x^2 + y^2 < r^2, 0 <= x <= u, 0 <= y <= w}."""
    def F(t):
        t = min(t, r)
        return 0.5 * (t * math.sqrt(max(r * r - t * t, 0.0)) + r * r * math.asin(t / r))

    xs = math.sqrt(max(r * r - w * w, 0.0)) if w < r else 0.0
    a1 = min(u, xs) * w
    lo, hi = min(u, xs), min(u, r)
    return a1 + max(F(hi) - F(lo), 0.0)


# --------------------------------------------------------------- polyhedral
def flat_disk_certificate(surface: PolyhedralSurface, ws: WindowSet, r: float) -> bool:
    """True when B(x, r) is certainly isometric to a flat disk (or flat sector at a vertex).

    Conditions: no relay, no boundary within r, no singular vertex at distance
    < r, and no face reached by two different windows (so straight segments of
    length < r never meet again).
    """
    if ws.relay_used or ws.boundary_touch < r:
        return False
    if len(np.unique(ws.face)) != len(ws.face):
        return False
    sing = surface.singular_vertex
    for v, d in ws.vertex_distances().items():
        if sing[v] and d < r:
            return False
    return True


def source_angle(ws: WindowSet) -> float:
    return float(sum(rt.sector for rt in ws.roots))


def pullback_hits(surface: PolyhedralSurface, ws: WindowSet, r: float, u: np.ndarray):
    """Classify tangent samples (uniforms ``u`` (N, 3)) as minimizing or not.

    Returns (hits, lost) boolean arrays; ``lost`` marks vectors whose geodesic
    left the window set (boundary exit or a numerically grazed vertex).
    """
    roots = ws.roots
    sectors = np.array([rt.sector for rt in roots])
    cdf = np.cumsum(sectors) / sectors.sum()
    cdf[-1] = 1.0
    ri = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(roots) - 1)
    start = np.array([rt.sector_start for rt in roots])
    ang = start[ri] + sectors[ri] * u[:, 1]
    rad = r * np.sqrt(u[:, 2])
    base = np.array([rt.xy for rt in roots])
    p = base[ri] + rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    n = len(u)
    best = np.full(n, -np.inf)
    win = np.full(n, -1, dtype=np.int64)
    yx = np.zeros(n)
    yy = np.zeros(n)
    charts = surface.mesh.charts
    lens = surface.mesh.lengths
    for w in range(len(ws)):
        root = ws.root[w]
        if root < 0:
            continue
        m = ri == root
        if not m.any():
            continue
        M = ws.maps[w]
        px, py = p[m, 0], p[m, 1]
        qx = M[0] * px + M[1] * py + M[4]
        qy = M[2] * px + M[3] * py + M[5]
        P = charts[ws.face[w]]
        marg = np.full(len(qx), np.inf)
        for k in range(3):
            A, B = P[k], P[(k + 1) % 3]
            L = lens[ws.face[w], k]
            marg = np.minimum(marg, ((B[0] - A[0]) * (qy - A[1]) - (B[1] - A[1]) * (qx - A[0])) / L)
        if not ws.full[w]:
            sx, sy = ws.s[w]
            ax, ay = ws.p[w, 0] - sx, ws.p[w, 1] - sy
            bx, by = ws.q[w, 0] - sx, ws.q[w, 1] - sy
            ux, uy = qx - sx, qy - sy
            marg = np.minimum(marg, (ax * uy - ay * ux) / math.hypot(ax, ay))
            marg = np.minimum(marg, (ux * by - uy * bx) / math.hypot(bx, by))
        idx = np.flatnonzero(m)
        better = marg > best[idx]
        sel = idx[better]
        best[sel] = marg[better]
        win[sel] = w
        yx[sel] = qx[better]
        yy[sel] = qy[better]
    tol = 1e-9 * r
    found = best >= -tol
    faces = np.where(found, ws.face[np.maximum(win, 0)], 0)
    d = ws.distances(faces, np.column_stack([yx, yy]))
    hits = found & (d >= rad - tol)
    return hits, ~found


def polyhedral_inner(surface: PolyhedralSurface, x: SurfacePoint, r: float, method: str, n: int,
                     rng: np.random.Generator, budget: int):
    """(b_hat, std_error, exact) for one center point."""
    if method == "auto":
        method = "pullback" if surface.locally_convex else "superset"
    if method == "pullback":
        if not surface.locally_convex:
            raise UnsupportedBackend("pullback needs a surface without saddle or reflex boundary vertices")
        ws = propagate(surface, x, r, budget)
        theta = source_angle(ws)
        full = 0.5 * theta * r * r
        if flat_disk_certificate(surface, ws, r):
            return full, 0.0, True
        hits, lost = pullback_hits(surface, ws, r, rng.random((n, 3)))
        if lost.any() and ws.boundary_touch >= r and lost.mean() > 1e-3:
            raise AssertionError(f"{int(lost.sum())} tangent samples were not matched to any window")
        p = hits.mean()
        return full * p, full * math.sqrt(p * (1 - p) / max(n - 1, 1)), False
    if method == "superset":
        ws = propagate_with_relay(surface, x, r, budget)
        if not ws.relay_used and flat_disk_certificate(surface, ws, r):
            return 0.5 * source_angle(ws) * r * r, 0.0, True
        ps = window_superset(ws, r)
        batch = ps.sample(rng, n)
        hit = ws.distances(batch.faces, batch.coords) < r
        p = hit.mean()
        return ps.total * p, ps.total * math.sqrt(p * (1 - p) / max(n - 1, 1)), False
    raise InvalidParameter(f"inner method {method!r} not available on polyhedral surfaces")


def analytic_inner(surface: Surface, x, r: float, method: str, n: int, rng: np.random.Generator):
    if method in ("auto", "analytic"):
        return analytic_ball_area(surface, x, r), 0.0, True
    if method in ("monte_carlo", "superset"):
        draw, area = analytic_superset(surface, x, r)
        hit = analytic_distances(surface, x, draw(rng, n)) < r
        p = hit.mean()
        return area * p, area * math.sqrt(p * (1 - p) / max(n - 1, 1)), False
    raise InvalidParameter(f"inner method {method!r} not available on analytic surfaces")


def inner_ball(surface: Surface, x: SurfacePoint, r: float, method: str, n: int, rng, budget: int):
    if isinstance(surface, PolyhedralSurface):
        return polyhedral_inner(surface, x, r, method, n, rng, budget)
    return analytic_inner(surface, x.coords, r, method, n, rng)


def ball_volume(surface: Surface, x: SurfacePoint, r: float, cfg: EstimatorConfig | None = None) -> MeasureEstimate:
    """H^2(B(x, r)): closed form on analytic backends, Monte Carlo on meshes."""
    cfg = cfg or EstimatorConfig()
    if not r > 0:
        raise InvalidParameter("r must be positive")
    if isinstance(surface, PolyhedralSurface):
        x = surface.canonicalize(x)
    rng = substream(cfg.seed, TAG_BALL)
    b, se, exact = inner_ball(surface, x, r, cfg.inner_method, cfg.inner, rng, cfg.budget)
    if exact:
        return MeasureEstimate(float(b))
    return MeasureEstimate(float(b), float(se), cfg.inner, "monte_carlo")
