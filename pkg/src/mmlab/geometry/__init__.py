"""Surface construction, area, sampling and curvature measures."""

from .mesh import PolyhedralMesh
from .types import EPS_MEM, PointBatch, RegionSpec, SurfacePoint, TangentVector
from .surfaces import (Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface,
                       build_analytic, build_polyhedral, polyhedral_from_positions)
from .hull import build_convex_hull_surface
from .doubling import double_polygon
from .sampling import sample_batch, sample_uniform
from .curvature import curvature_measure, exterior_dihedral_angles, mean_curvature_measure
from .regions import area
from .meshio import load_descriptor, read_mesh

__all__ = [
    "PolyhedralMesh", "EPS_MEM", "PointBatch", "RegionSpec", "SurfacePoint", "TangentVector",
    "Cone", "FlatTorus", "HalfPlane", "Plane", "PolyhedralSurface", "Sphere", "Surface",
    "build_analytic", "build_polyhedral", "polyhedral_from_positions", "build_convex_hull_surface",
    "double_polygon", "sample_batch", "sample_uniform", "curvature_measure", "exterior_dihedral_angles",
    "mean_curvature_measure", "area", "load_descriptor", "read_mesh",
]
