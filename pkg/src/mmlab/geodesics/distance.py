"""Intrinsic distances: closed forms on the analytic catalog, unfolding on meshes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameter, UnsupportedBackend
from ..geometry.surfaces import Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface
from ..geometry.types import SurfacePoint
from .unfold import DEFAULT_BUDGET, propagate, propagate_with_relay, source_roots


@dataclass(frozen=True)
class DistanceAnswer:
    """``value`` is None when the distance exceeds ``r_max``."""

    value: float | None
    witness: tuple[int, ...] | None = None
    relay_vertices: tuple[int, ...] = ()


def analytic_distances(surface: Surface, x, ys) -> np.ndarray:
    """Distances from coordinates ``x`` (2,) to rows of ``ys`` (N, 2) on an analytic backend."""
    x = np.asarray(x, dtype=float)
    ys = np.asarray(ys, dtype=float).reshape(-1, 2)
    if isinstance(surface, (Plane, HalfPlane)):
        return np.hypot(ys[:, 0] - x[0], ys[:, 1] - x[1])
    if isinstance(surface, FlatTorus):
        dx = np.mod(ys[:, 0] - x[0], surface.a)
        dy = np.mod(ys[:, 1] - x[1], surface.b)
        dx = np.minimum(dx, surface.a - dx)
        dy = np.minimum(dy, surface.b - dy)
        return np.hypot(dx, dy)
    if isinstance(surface, Sphere):
        p = surface.to_cartesian(x)
        Q = surface.to_cartesian(ys)
        cr = np.linalg.norm(np.cross(p[None, :], Q), axis=1)
        return surface.R * np.arctan2(cr, Q @ p)
    if isinstance(surface, Cone):
        rho = surface.rho
        a, b = x[0], ys[:, 0]
        psi = np.mod(np.abs(ys[:, 1] - x[1]), rho)
        psi = np.minimum(psi, rho - psi)
        d2 = np.maximum(a * a + b * b - 2 * a * b * np.cos(psi), 0.0)
        return np.where(psi < math.pi, np.sqrt(d2), a + b)
    raise UnsupportedBackend(f"no closed-form distance for {type(surface).__name__}")


def _key(p: SurfacePoint):
    return (p.face, p.coords[0], p.coords[1])


def distance(surface: Surface, x: SurfacePoint, y: SurfacePoint, r_max: float,
             budget: int = DEFAULT_BUDGET) -> DistanceAnswer:
    """Exact geodesic distance if it is at most ``r_max``, else ``value=None``."""
    if not r_max > 0:
        raise InvalidParameter("r_max must be positive")
    if not isinstance(surface, PolyhedralSurface):
        d = float(analytic_distances(surface, x.coords, [y.coords])[0])
        return DistanceAnswer(d if d <= r_max else None)
    x, y = surface.canonicalize(x), surface.canonicalize(y)
    if _key(y) < _key(x):
        x, y = y, x
    targets = [(rt.face, rt.xy) for rt in source_roots(surface, y)]
    if len(surface.relay_vertices):
        ws = propagate_with_relay(surface, x, r_max * (1 + 1e-12), budget)
    else:
        ws = propagate(surface, x, r_max * (1 + 1e-12), budget, stop_at=targets)
    d, win = ws.distances([f for f, _ in targets], [c for _, c in targets], return_window=True)
    j = int(np.argmin(d))
    if not np.isfinite(d[j]) or d[j] > r_max:
        return DistanceAnswer(None, None, ws.relay_used)
    w = int(win[j])
    return DistanceAnswer(float(d[j]), ws.face_sequence(w), ws.relay_used)
