"""Uniform area sampling on surfaces and regions.

Uniform streams come in fixed blocks (``rng.BLOCK`` rows per block, one
substream per block), so a given seed yields the same points no matter how
the index range is split between workers.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidParameter, UnsupportedBackend
from ..rng import BLOCK, substream
from .surfaces import Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface
from .types import PointBatch, RegionSpec, SurfacePoint

TAG_SAMPLE = 11


def triangle_points(tri: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms ``u`` (N, 2) to uniform points in triangles ``tri`` (N, 3, 2)."""
    s = np.sqrt(u[:, 0])
    b0 = 1.0 - s
    b1 = s * (1.0 - u[:, 1])
    b2 = s * u[:, 1]
    return b0[:, None] * tri[:, 0] + b1[:, None] * tri[:, 1] + b2[:, None] * tri[:, 2]


class PieceSampler:
    """Uniform sampling on a finite union of (face, planar triangle) pieces."""

    def __init__(self, faces, tris, areas):
        self.faces = np.asarray(faces, dtype=np.int64)
        self.tris = np.asarray(tris, dtype=float).reshape(-1, 3, 2)
        self.areas = np.asarray(areas, dtype=float)
        self.total = float(self.areas.sum())
        if not self.total > 0:
            raise InvalidParameter("region has zero area")
        self.cdf = np.cumsum(self.areas) / self.total
        self.cdf[-1] = 1.0

    def from_uniforms(self, u: np.ndarray) -> PointBatch:
        k = np.minimum(np.searchsorted(self.cdf, u[:, 0], side="right"), len(self.cdf) - 1)
        pts = triangle_points(self.tris[k], u[:, 1:3])
        return PointBatch(pts, self.faces[k])

    def sample(self, rng: np.random.Generator, n: int) -> PointBatch:
        return self.from_uniforms(rng.random((n, 3)))


def face_sampler(surface: PolyhedralSurface, faces=None) -> PieceSampler:
    m = surface.mesh
    idx = np.arange(m.n_faces) if faces is None else np.asarray(sorted(set(int(f) for f in faces)), dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= m.n_faces):
        raise InvalidParameter("face id out of range")
    return PieceSampler(idx, m.charts[idx], m.face_area[idx])


def _clip_polygon(poly: list, xmin, xmax, ymin, ymax) -> list:
    def clip(pts, inside, inter):
        out = []
        for i in range(len(pts)):
            a, b = pts[i - 1], pts[i]
            ia, ib = inside(a), inside(b)
            if ib:
                if not ia:
                    out.append(inter(a, b))
                out.append(b)
            elif ia:
                out.append(inter(a, b))
        return out

    def lerp_x(x0):
        return lambda a, b: (x0, a[1] + (b[1] - a[1]) * (x0 - a[0]) / (b[0] - a[0]))

    def lerp_y(y0):
        return lambda a, b: (a[0] + (b[0] - a[0]) * (y0 - a[1]) / (b[1] - a[1]), y0)

    for inside, inter in ((lambda p: p[0] >= xmin, lerp_x(xmin)), (lambda p: p[0] <= xmax, lerp_x(xmax)),
                          (lambda p: p[1] >= ymin, lerp_y(ymin)), (lambda p: p[1] <= ymax, lerp_y(ymax))):
        poly = clip(poly, inside, inter)
        if not poly:
            return []
    return poly


def window_superset(ws, r: float) -> PieceSampler:
    """Pieces covering B(source, r): each reached face clipped to the box around its source images."""
    surf = ws.surface
    faces, tris, areas = [], [], []
    for f, idx in ws.by_face.items():
        rad = r - ws.offset[idx]
        keep = rad > 0
        if not keep.any():
            continue
        s = ws.s[idx][keep]
        rad = rad[keep]
        xmin, xmax = float((s[:, 0] - rad).min()), float((s[:, 0] + rad).max())
        ymin, ymax = float((s[:, 1] - rad).min()), float((s[:, 1] + rad).max())
        poly = _clip_polygon([tuple(p) for p in surf.charts_py[f]], xmin, xmax, ymin, ymax)
        for j in range(1, len(poly) - 1):
            a, b, c = poly[0], poly[j], poly[j + 1]
            area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            if area > 0:
                faces.append(f)
                tris.append((a, b, c))
                areas.append(area)
    return PieceSampler(faces, tris, areas)


# ------------------------------------------------------------ analytic pieces
def analytic_superset(surface: Surface, x, r: float):
    """(sampler(rng, n) -> coords, area) of a set containing B(x, r) on an analytic backend."""
    x = np.asarray(x, dtype=float)
    if isinstance(surface, (Plane, HalfPlane)):
        lo_y = max(x[1] - r, 0.0) if isinstance(surface, HalfPlane) else x[1] - r
        hi_y = x[1] + r

        def draw(rng, n):
            u = rng.random((n, 2))
            return np.column_stack([x[0] - r + 2 * r * u[:, 0], lo_y + (hi_y - lo_y) * u[:, 1]])

        return draw, 2 * r * (hi_y - lo_y)
    if isinstance(surface, FlatTorus):
        if 2 * r >= min(surface.a, surface.b):
            return (lambda rng, n: rng.random((n, 2)) * [surface.a, surface.b]), surface.a * surface.b

        def draw(rng, n):
            u = rng.random((n, 2))
            return surface.wrap(x - r + 2 * r * u)

        return draw, 4 * r * r
    if isinstance(surface, Sphere):
        ang = min(r / surface.R, math.pi)
        p = surface.to_cartesian(x)
        e1, e2 = surface.frame(x)
        z0 = math.cos(ang)

        def draw(rng, n):
            u = rng.random((n, 2))
            z = 1.0 - (1.0 - z0) * u[:, 0]
            ph = 2 * math.pi * u[:, 1]
            st = np.sqrt(np.maximum(1 - z * z, 0))
            P = z[:, None] * p + (st * np.cos(ph))[:, None] * e1 + (st * np.sin(ph))[:, None] * e2
            return surface.from_cartesian(P)

        return draw, 2 * math.pi * surface.R ** 2 * (1 - z0)
    if isinstance(surface, Cone):
        lo, hi = max(0.0, x[0] - r), x[0] + r

        def draw(rng, n):
            u = rng.random((n, 2))
            rad = np.sqrt(lo * lo + (hi * hi - lo * lo) * u[:, 0])
            return np.column_stack([rad, surface.rho * u[:, 1]])

        return draw, 0.5 * surface.rho * (hi * hi - lo * lo)
    raise UnsupportedBackend(f"no sampler for {type(surface).__name__}")


def _analytic_whole(surface: Surface):
    if isinstance(surface, FlatTorus):
        return (lambda rng, n: rng.random((n, 2)) * [surface.a, surface.b]), surface.a * surface.b
    if isinstance(surface, Sphere):
        def draw(rng, n):
            u = rng.random((n, 2))
            return np.column_stack([np.arccos(1 - 2 * u[:, 0]), 2 * math.pi * u[:, 1]])

        return draw, surface.total_area()
    raise InvalidParameter(f"{surface.kind} has infinite area; use a bounded region")


# ------------------------------------------------------------------ regions
def region_sampler(surface: Surface, region: RegionSpec, budget: int = 100_000):
    """Return ``(draw(rng, n) -> PointBatch, accept(batch) -> mask, superset_area)``.

    Points are drawn from a superset and the accept mask carves out the region
    (rejection sampling); for whole surfaces and face sets the mask is all True.
    """
    if region.kind == "vertex":
        if not isinstance(surface, PolyhedralSurface):
            if isinstance(surface, Cone) and region.vertex == 0:
                region = RegionSpec.ball(surface.apex, region.radius)
            else:
                raise UnsupportedBackend("vertex regions need a polyhedral surface or a cone apex (vertex 0)")
        else:
            if not 0 <= region.vertex < surface.mesh.n_vertices:
                raise InvalidParameter("vertex id out of range")
            region = RegionSpec.ball(surface.vertex_point(region.vertex), region.radius)
    if isinstance(surface, PolyhedralSurface):
        if region.kind == "whole":
            ps = face_sampler(surface)
            return (lambda rng, n: ps.sample(rng, n)), None, ps.total
        if region.kind == "faces":
            ps = face_sampler(surface, region.faces)
            return (lambda rng, n: ps.sample(rng, n)), None, ps.total
        if region.kind == "ball":
            from ..geodesics.unfold import propagate_with_relay
            c = surface.canonicalize(region.center)
            ws = propagate_with_relay(surface, c, region.radius, budget)
            ps = window_superset(ws, region.radius)

            def accept(batch):
                return ws.distances(batch.faces, batch.coords) < region.radius

            return (lambda rng, n: ps.sample(rng, n)), accept, ps.total
        raise UnsupportedBackend("strip regions are only available on the half plane")
    # analytic backends
    if region.kind == "whole":
        draw, area = _analytic_whole(surface)
        return (lambda rng, n: PointBatch(draw(rng, n))), None, area
    if region.kind == "ball":
        from ..geodesics.distance import analytic_distances
        draw, area = analytic_superset(surface, region.center.coords, region.radius)

        def accept(batch):
            return analytic_distances(surface, region.center.coords, batch.coords) < region.radius

        return (lambda rng, n: PointBatch(draw(rng, n))), accept, area
    if region.kind == "strip":
        if not isinstance(surface, HalfPlane):
            raise UnsupportedBackend("strip regions are only available on the half plane")
        w = region.offset

        def draw(rng, n):
            u = rng.random((n, 2))
            return PointBatch(np.column_stack([u[:, 0], w * u[:, 1]]))

        return draw, None, w
    raise UnsupportedBackend(f"region {region.kind!r} is not available on {surface.kind}")


def sample_batch(surface: Surface, region: RegionSpec, count: int, seed: int, tag: int = TAG_SAMPLE,
                 budget: int = 100_000) -> PointBatch:
    """Vectorized uniform samples from the normalized area measure on ``region``."""
    if count < 0:
        raise InvalidParameter("count must be >= 0")
    draw, accept, area = region_sampler(surface, region, budget)
    if not area > 0:
        raise InvalidParameter("region has zero area")
    coords, faces = [], []
    for b, start in enumerate(range(0, count, BLOCK)):
        need = min(BLOCK, count - start)
        rng = substream(seed, tag, b)
        got = 0
        tries = 0
        while got < need:
            batch = draw(rng, max(need - got, 64) * (1 if accept is None else 2))
            if accept is not None:
                m = accept(batch)
                batch = PointBatch(batch.coords[m], None if batch.faces is None else batch.faces[m])
            take = min(len(batch), need - got)
            coords.append(batch.coords[:take])
            if batch.faces is not None:
                faces.append(batch.faces[:take])
            got += take
            tries += 1
            if tries > 10_000:
                raise InvalidParameter("rejection sampling made no progress (region of ~zero area?)")
    if not coords:
        return PointBatch(np.zeros((0, 2)), np.zeros(0, dtype=np.int64) if surface.is_polyhedral else None)
    C = np.concatenate(coords)
    F = np.concatenate(faces) if faces else None
    return PointBatch(C, F)


def sample_uniform(surface: Surface, region: RegionSpec, count: int, seed: int) -> list[SurfacePoint]:
    """``count`` i.i.d. uniform points on ``region`` (deterministic for a fixed seed)."""
    return sample_batch(surface, region, count, seed).to_list()
