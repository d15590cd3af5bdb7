"""Area (2-dimensional Hausdorff measure) of regions."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameter, UnsupportedBackend
from ..estimate import EstimatorConfig, MeasureEstimate
from .surfaces import Cone, HalfPlane, PolyhedralSurface, Surface
from .types import RegionSpec


def area(surface: Surface, region: RegionSpec, cfg: EstimatorConfig | None = None) -> MeasureEstimate:
    """H^2(region): exact for whole surfaces and face subsets, ball areas via ball_volume.

    Strips on the half plane are measured per unit length of boundary.
    """
    if region.kind == "whole":
        A = surface.total_area()
        if not np.isfinite(A):
            raise InvalidParameter(f"{surface.kind} has infinite area")
        return MeasureEstimate(A)
    if region.kind == "faces":
        if not isinstance(surface, PolyhedralSurface):
            raise UnsupportedBackend("face subsets need a polyhedral surface")
        fs = np.asarray(region.faces)
        if fs.min() < 0 or fs.max() >= surface.mesh.n_faces:
            raise InvalidParameter("face id out of range")
        return MeasureEstimate(float(surface.mesh.face_area[fs].sum()))
    if region.kind == "strip":
        if not isinstance(surface, HalfPlane):
            raise UnsupportedBackend("strip regions are only available on the half plane")
        return MeasureEstimate(region.offset)
    from ..measures.ball import ball_volume
    if region.kind == "vertex":
        if isinstance(surface, Cone):
            if region.vertex != 0:
                raise InvalidParameter("the cone has only vertex 0 (the apex)")
            center = surface.apex
        elif isinstance(surface, PolyhedralSurface):
            if not 0 <= region.vertex < surface.mesh.n_vertices:
                raise InvalidParameter("vertex id out of range")
            center = surface.vertex_point(region.vertex)
        else:
            raise UnsupportedBackend("vertex regions need a polyhedral surface or a cone")
        return ball_volume(surface, center, region.radius, cfg or EstimatorConfig())
    return ball_volume(surface, region.center, region.radius, cfg or EstimatorConfig())
