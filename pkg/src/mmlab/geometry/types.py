"""Points, tangent vectors and region descriptors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameter

# point-in-face tolerance, intrinsic length units
EPS_MEM = 1e-9


@dataclass(frozen=True)
class SurfacePoint:
    """A point on a surface.

    For polyhedral surfaces ``face`` is the face id and ``coords`` are the
    coordinates in that face's planar chart.  Analytic backends leave
    ``face`` as ``None`` and use backend coordinates: planar (x, y) for the
    plane, half-plane and torus, (colatitude, longitude) for the sphere and
    (radius, angle) for the cone.
    """

    coords: tuple[float, float]
    face: int | None = None

    @property
    def xy(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class TangentVector:
    """``norm * direction`` at ``base``; direction is a unit vector in the base chart/frame."""

    base: SurfacePoint
    direction: tuple[float, float]
    norm: float

    def __post_init__(self):
        dx, dy = self.direction
        n = float(np.hypot(dx, dy))
        if not np.isfinite(n) or abs(n - 1.0) > 1e-12:
            raise InvalidParameter(f"direction must be a unit vector, got |d| = {n!r}")
        if self.norm < 0:
            raise InvalidParameter("norm must be nonnegative")

    @classmethod
    def from_vector(cls, base: SurfacePoint, vec) -> "TangentVector":
        vx, vy = float(vec[0]), float(vec[1])
        n = float(np.hypot(vx, vy))
        if n == 0.0:
            return cls(base, (1.0, 0.0), 0.0)
        return cls(base, (vx / n, vy / n), n)

    @property
    def vector(self) -> np.ndarray:
        return self.norm * np.asarray(self.direction)

    def scaled(self, lam: float) -> "TangentVector":
        if lam < 0:
            return TangentVector(self.base, (-self.direction[0], -self.direction[1]), -lam * self.norm)
        return TangentVector(self.base, self.direction, lam * self.norm)

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, (-self.direction[0], -self.direction[1]), self.norm)


@dataclass(frozen=True)
class RegionSpec:
    """A Borel set on a surface.

    kind is one of ``whole``, ``ball``, ``vertex``, ``strip``, ``faces``.
    """

    kind: str = "whole"
    center: SurfacePoint | None = None
    radius: float | None = None
    vertex: int | None = None
    offset: float | None = None
    faces: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("whole", "ball", "vertex", "strip", "faces"):
            raise InvalidParameter(f"unknown region kind {self.kind!r}")
        if self.kind in ("ball", "vertex") and not (self.radius is not None and self.radius > 0):
            raise InvalidParameter("region radius must be positive")
        if self.kind == "ball" and self.center is None:
            raise InvalidParameter("ball region needs a center")
        if self.kind == "vertex" and self.vertex is None:
            raise InvalidParameter("vertex region needs a vertex id")
        if self.kind == "strip" and not (self.offset is not None and self.offset > 0):
            raise InvalidParameter("strip offset must be positive")
        if self.kind == "faces" and not self.faces:
            raise InvalidParameter("face region needs at least one face id")

    @classmethod
    def whole(cls) -> "RegionSpec":
        return cls("whole")

    @classmethod
    def ball(cls, center: SurfacePoint, radius: float) -> "RegionSpec":
        return cls("ball", center=center, radius=float(radius))

    @classmethod
    def vertex_nbhd(cls, vertex: int, radius: float) -> "RegionSpec":
        return cls("vertex", vertex=int(vertex), radius=float(radius))

    @classmethod
    def strip(cls, offset: float) -> "RegionSpec":
        return cls("strip", offset=float(offset))

    @classmethod
    def face_set(cls, faces) -> "RegionSpec":
        return cls("faces", faces=tuple(sorted(int(f) for f in faces)))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.center is not None:
            d["center"] = {"face": self.center.face, "coords": list(self.center.coords)}
        for key in ("radius", "vertex", "offset"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        if self.faces is not None:
            d["faces"] = list(self.faces)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RegionSpec":
        center = None
        if "center" in d and d["center"] is not None:
            c = d["center"]
            center = SurfacePoint(tuple(float(v) for v in c["coords"]), c.get("face"))
        faces = tuple(d["faces"]) if d.get("faces") is not None else None
        return cls(d.get("kind", "whole"), center=center, radius=d.get("radius"),
                   vertex=d.get("vertex"), offset=d.get("offset"), faces=faces)


@dataclass
class PointBatch:
    """Vectorized points: ``coords`` (N, 2), ``faces`` (N,) for polyhedral surfaces."""

    coords: np.ndarray
    faces: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.coords)

    def point(self, i: int) -> SurfacePoint:
        f = None if self.faces is None else int(self.faces[i])
        return SurfacePoint((float(self.coords[i, 0]), float(self.coords[i, 1])), f)

    def to_list(self) -> list[SurfacePoint]:
        return [self.point(i) for i in range(len(self))]

    @classmethod
    def from_points(cls, pts) -> "PointBatch":
        pts = list(pts)
        coords = np.array([p.coords for p in pts], dtype=float).reshape(-1, 2)
        if pts and pts[0].face is not None:
            return cls(coords, np.array([p.face for p in pts], dtype=np.int64))
        return cls(coords, None)
