"""Atomic curvature measure and the edge-supported mean curvature measure.

Region semantics for face subsets: a vertex or edge belongs to the subset
when its lowest-id incident face does, which makes both measures additive
over any partition of the faces.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidParameter, UnsupportedBackend
from .surfaces import Cone, PolyhedralSurface, Surface
from .types import RegionSpec


def _ball_of(surface: PolyhedralSurface, region: RegionSpec):
    if region.kind == "vertex":
        if not 0 <= region.vertex < surface.mesh.n_vertices:
            raise InvalidParameter("vertex id out of range")
        return surface.vertex_point(region.vertex), region.radius
    return surface.canonicalize(region.center), region.radius


def vertices_in_region(surface: PolyhedralSurface, region: RegionSpec, budget: int = 100_000) -> np.ndarray:
    nv = surface.mesh.n_vertices
    if region.kind == "whole":
        return np.arange(nv)
    if region.kind == "faces":
        fs = np.asarray(region.faces)
        if fs.min() < 0 or fs.max() >= surface.mesh.n_faces:
            raise InvalidParameter("face id out of range")
        return np.flatnonzero(np.isin(surface.vertex_face, fs))
    if region.kind in ("ball", "vertex"):
        from ..geodesics.unfold import propagate_with_relay
        c, R = _ball_of(surface, region)
        ws = propagate_with_relay(surface, c, R, budget)
        return np.array(sorted(v for v, d in ws.vertex_distances().items() if d < R), dtype=np.int64)
    raise UnsupportedBackend(f"region {region.kind!r} not supported for curvature")


def curvature_measure(surface: Surface, region: RegionSpec) -> float:
    """Omega(region): sum of angle defects 2*pi - theta_v over cone points in the region."""
    if isinstance(surface, Cone):
        if region.kind == "whole":
            return surface.alpha
        if region.kind == "ball":
            return surface.alpha if region.center.coords[0] < region.radius else 0.0
        if region.kind == "vertex":
            return surface.alpha if region.vertex == 0 else 0.0
        raise UnsupportedBackend(f"region {region.kind!r} not supported on the cone")
    if not isinstance(surface, PolyhedralSurface):
        raise UnsupportedBackend(f"curvature measure of {surface.kind} is not atomic")
    vs = vertices_in_region(surface, region)
    return float(surface.mesh.defects[vs].sum())


def exterior_dihedral_angles(surface: PolyhedralSurface) -> np.ndarray:
    """theta_e = angle between outward normals of the two faces of each edge (0 on boundary edges).

    Negative values mark reflex (non-convex) edges.
    """
    m = surface.mesh
    if m.positions is None:
        raise InvalidParameter("mesh has no ambient positions")
    X = m.positions
    tri = X[m.faces]
    nrm = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    out = np.zeros(len(m.edges))
    for e, (f, k, g, j) in enumerate(m.edges):
        if g < 0:
            continue
        c = float(np.clip(nrm[f] @ nrm[g], -1.0, 1.0))
        ang = math.atan2(float(np.linalg.norm(np.cross(nrm[f], nrm[g]))), c)
        # the opposite vertex of g lies below f's plane for a convex edge
        opp = X[m.faces[g, (j + 2) % 3]]
        side = float(nrm[f] @ (opp - tri[f, 0]))
        out[e] = -ang if side > 1e-12 * m.lengths[f, k] else ang
    return out


def edge_lengths(surface: PolyhedralSurface) -> np.ndarray:
    m = surface.mesh
    return m.lengths[m.edges[:, 0], m.edges[:, 1]]


def _require_convex(surface) -> np.ndarray:
    if not isinstance(surface, PolyhedralSurface) or not surface.convex_embedded:
        raise UnsupportedBackend("mean curvature measure needs a convex embedded polyhedral surface")
    th = exterior_dihedral_angles(surface)
    if np.any(th < -1e-12):
        raise UnsupportedBackend("surface has reflex edges; it is not convex")
    return th


def mean_curvature_measure(surface: Surface, region: RegionSpec, budget: int = 100_000) -> float:
    """K(region) = sum over edges of length(e intersected with region) * theta_e."""
    th = _require_convex(surface)
    L = edge_lengths(surface)
    if region.kind == "whole":
        return float(np.sum(L * th))
    if region.kind == "faces":
        fs = np.asarray(region.faces)
        if fs.min() < 0 or fs.max() >= surface.mesh.n_faces:
            raise InvalidParameter("face id out of range")
        m = np.isin(surface.edge_face, fs)
        return float(np.sum(L[m] * th[m]))
    if region.kind in ("ball", "vertex"):
        c, R = _ball_of(surface, region)
        lens = edge_ball_lengths(surface, c, R, budget)
        return float(sum(th[e] * ell for e, ell in lens.items()))
    raise UnsupportedBackend(f"region {region.kind!r} not supported for mean curvature")


def edge_ball_lengths(surface: PolyhedralSurface, center, R: float, budget: int = 100_000) -> dict[int, float]:
    """Length of each edge inside the open ball B(center, R), from window intervals."""
    from ..geodesics.unfold import propagate_with_relay
    ws = propagate_with_relay(surface, center, R, budget)
    L = edge_lengths(surface)
    out = {}
    for e, ivs in ws.edge_ball_intervals(R).items():
        ivs.sort()
        total, cur_lo, cur_hi = 0.0, None, None
        for lo, hi in ivs:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        total += cur_hi - cur_lo
        out[e] = min(total, 1.0) * L[e]
    return out
