import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmlab import catalog
from mmlab.errors import DegenerateInput, InvalidParameter, MeshError
from mmlab.geometry import (RegionSpec, SurfacePoint, area, build_analytic, build_convex_hull_surface,
                            curvature_measure, double_polygon, load_descriptor, mean_curvature_measure,
                            polyhedral_from_positions, sample_batch)
from mmlab.geometry.meshio import read_mesh, write_off


def test_cube_gauss_bonnet():
    S = catalog.cube()
    d = S.mesh.defects
    assert np.allclose(d, math.pi / 2)
    assert math.isclose(d.sum(), 4 * math.pi)
    assert math.isclose(S.total_area(), 6.0)
    assert S.mesh.euler_characteristic == 2


def test_tetrahedron_defects():
    S = catalog.tetrahedron()
    assert np.allclose(S.mesh.defects, math.pi)
    assert math.isclose(S.total_area(), math.sqrt(3))


def test_doubled_square_corners_are_pi_cones():
    S = catalog.doubled_square()
    d = S.mesh.defects
    corners = np.isclose(d, math.pi)
    assert corners.sum() == 4
    assert np.allclose(d[~corners], 0, atol=1e-12)
    assert not S.has_boundary
    assert math.isclose(S.total_area(), 2.0)


def test_flat_square_is_flat_inside():
    S = catalog.flat_square(30, seed=1)
    m = S.mesh
    assert S.has_boundary
    assert np.allclose(m.defects[~m.boundary_vertex], 0, atol=1e-12)


def test_cube_mean_curvature_total():
    S = catalog.cube()
    # 12 unit edges with exterior angle pi/2, diagonals are flat
    assert math.isclose(mean_curvature_measure(S, RegionSpec.whole()), 6 * math.pi, rel_tol=1e-12)


def test_curvature_measure_of_vertex_ball():
    S = catalog.cube()
    assert math.isclose(curvature_measure(S, RegionSpec.vertex_nbhd(0, 0.3)), math.pi / 2)
    cone = build_analytic("cone", alpha=0.3)
    assert curvature_measure(cone, RegionSpec.ball(SurfacePoint((0.1, 0.0)), 0.2)) == pytest.approx(0.3)
    assert curvature_measure(cone, RegionSpec.ball(SurfacePoint((0.5, 0.0)), 0.2)) == 0.0


def test_area_of_face_set_and_ball():
    S = catalog.cube()
    assert math.isclose(area(S, RegionSpec.face_set([0, 1])).value, 1.0)
    torus = build_analytic("flat_torus")
    assert math.isclose(area(torus, RegionSpec.whole()).value, 1.0)
    with pytest.raises(InvalidParameter):
        area(build_analytic("plane"), RegionSpec.whole())


def test_non_manifold_edge_rejected():
    pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]], float)
    faces = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
    with pytest.raises(MeshError):
        polyhedral_from_positions(pos, faces)


def test_bad_vertex_index_rejected():
    with pytest.raises(MeshError):
        polyhedral_from_positions(np.zeros((3, 3)), [[0, 1, 5]])


def test_off_round_trip(tmp_path):
    S = catalog.cube()
    path = tmp_path / "cube.off"
    write_off(path, S.mesh.positions, S.mesh.faces)
    m = read_mesh(str(path))
    assert m.n_vertices == 8 and m.n_faces == 12
    assert math.isclose(m.face_area.sum(), 6.0)


def test_truncated_off_is_mesh_error(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0\n")
    with pytest.raises(MeshError):
        read_mesh(str(path))


def test_descriptor_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "sphere", "params": {"R": 2.0}}))
    S = load_descriptor(str(path))
    assert math.isclose(S.total_area(), 16 * math.pi)
    with pytest.raises(InvalidParameter):
        load_descriptor({"kind": "klein_bottle"})


def test_self_intersecting_polygon_rejected():
    with pytest.raises((DegenerateInput, InvalidParameter, MeshError)):
        double_polygon(np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float))


def test_uniform_sampling_matches_face_areas():
    S = catalog.box(1.0, 2.0, 0.5)
    b = sample_batch(S, RegionSpec.whole(), 20000, seed=3)
    counts = np.bincount(b.faces, minlength=S.mesh.n_faces)
    expected = 20000 * S.mesh.face_area / S.total_area()
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    assert chi2 < 40  # 11 dof
    for f, xy in zip(b.faces[:200], b.coords[:200]):
        assert S.contains(int(f), xy, tol=1e-9)


def test_sampling_is_deterministic():
    S = catalog.tetrahedron()
    a = sample_batch(S, RegionSpec.whole(), 50, seed=9)
    b = sample_batch(S, RegionSpec.whole(), 50, seed=9)
    assert np.array_equal(a.faces, b.faces) and np.array_equal(a.coords, b.coords)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(6, 40))
def test_convex_hull_is_a_convex_sphere(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3))
    S = build_convex_hull_surface(pts)
    m = S.mesh
    assert m.euler_characteristic == 2
    assert np.all(m.defects > -1e-9)
    assert math.isclose(m.defects.sum(), 4 * math.pi, rel_tol=1e-9)
    assert S.locally_convex


def test_random_convex_plane_defect_budget():
    S = catalog.random_convex_plane(50, seed=4, total_defect=0.2)
    m = S.mesh
    d = m.defects[~m.boundary_vertex]
    assert np.all(d >= -1e-12)
    assert math.isclose(d.sum(), 0.2, rel_tol=1e-9)
